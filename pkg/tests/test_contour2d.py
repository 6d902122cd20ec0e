"""Tests for the planar contour decomposition and remeshing."""

import numpy as np
import pytest

from equimesh.benchmarks import blob_contour, ellipse_contour
from equimesh.contour2d import (
    MIN_SEGMENTS,
    ContourWeights,
    EllipticDomain,
    contour_tangents,
    decompose_contour,
    elliptic_coords,
    fit_ellipse,
    inverse_elliptic,
    read_contour_csv,
    read_contours,
    reconstruct_contour,
    remesh_contour,
    remesh_microstructure_2d,
    segment_budgets,
    self_intersects,
    write_contour_csv,
    write_contours,
)
from equimesh.errors import (
    EngineError,
    FormatError,
    GuardError,
    IntersectionError,
    SingularityError,
)
from equimesh.mesh import Contour2D


def star_contour(n_points=40, spikes=5, depth=0.95):
    t = np.arange(n_points) * 2.0 * np.pi / n_points
    r = 1.0 + depth * np.cos(spikes * t)
    return Contour2D(
        points=np.column_stack([r * np.cos(t), r * np.sin(t)]), closed=True
    )


# ---------------------------------------------------------------------------
# elliptic chart

def test_domain_validation():
    EllipticDomain(e=1.0, zeta0=0.5)
    with pytest.raises(ValueError):
        EllipticDomain(e=0.0, zeta0=0.5)
    with pytest.raises(ValueError):
        EllipticDomain(e=1.0, zeta0=-0.1)
    with pytest.raises(ValueError):
        EllipticDomain(e=1.0, zeta0=0.5, center=(1.0, 2.0, 3.0))


def test_semi_axes():
    dom = EllipticDomain(e=2.0, zeta0=1.0)
    a, b = dom.semi_axes()
    assert a == pytest.approx(2.0 * np.cosh(1.0), rel=1e-14)
    assert b == pytest.approx(2.0 * np.sinh(1.0), rel=1e-14)
    assert a * a - b * b == pytest.approx(4.0, rel=1e-12)  # confocal identity


def test_elliptic_roundtrip_with_placement():
    dom = EllipticDomain(e=1.3, zeta0=0.8, center=(2.0, -1.0), rotation=0.6)
    eta = np.linspace(0.0, 2.0 * np.pi, 37, endpoint=False)
    pts = elliptic_coords(dom, eta)
    zeta, eta_back = inverse_elliptic(dom, pts)
    assert zeta == pytest.approx(np.full_like(eta, 0.8), abs=1e-10)
    assert eta_back == pytest.approx(eta, abs=1e-10)
    assert (eta_back >= 0.0).all() and (eta_back < 2.0 * np.pi).all()


def test_inverse_elliptic_focal_segment():
    dom = EllipticDomain(e=1.0, zeta0=0.5)
    with pytest.raises(SingularityError):
        inverse_elliptic(dom, np.array([[0.5, 0.0]]))


def test_fit_ellipse_recovers_axis_aligned():
    c = ellipse_contour(a=2.0, b=0.5, n_points=64)
    dom = fit_ellipse(c)
    a, b = dom.semi_axes()
    assert a == pytest.approx(2.0, rel=1e-9)
    assert b == pytest.approx(0.5, rel=1e-9)
    assert dom.center == pytest.approx((0.0, 0.0), abs=1e-12)
    assert dom.rotation == pytest.approx(0.0, abs=1e-9)
    assert dom.e == pytest.approx(np.sqrt(4.0 - 0.25), rel=1e-9)


def test_fit_ellipse_recovers_placement():
    base = ellipse_contour(a=3.0, b=1.0, n_points=80).points
    rot = np.pi / 5.0
    R = np.array([[np.cos(rot), -np.sin(rot)], [np.sin(rot), np.cos(rot)]])
    moved = Contour2D(points=base @ R.T + np.array([4.0, -2.0]), closed=True)
    dom = fit_ellipse(moved)
    a, b = dom.semi_axes()
    assert a == pytest.approx(3.0, rel=1e-9)
    assert b == pytest.approx(1.0, rel=1e-9)
    assert dom.center == pytest.approx((4.0, -2.0), abs=1e-10)
    assert dom.rotation == pytest.approx(rot, abs=1e-9)


def test_fit_ellipse_circle_floor():
    c = ellipse_contour(a=1.0, b=1.0, n_points=48)
    dom = fit_ellipse(c)
    a, b = dom.semi_axes()
    assert dom.e == pytest.approx(0.05, rel=1e-6)  # focal floor kicks in
    assert a == pytest.approx(1.0, rel=1e-9)


def test_fit_ellipse_rejects_open_contour():
    pts = ellipse_contour(a=2.0, b=1.0, n_points=10).points
    with pytest.raises(ValueError):
        fit_ellipse(Contour2D(points=pts, closed=False))


# ---------------------------------------------------------------------------
# weights and reconstruction

def test_contour_weights_validation():
    dom = EllipticDomain(e=1.0, zeta0=0.5)
    ContourWeights(np.zeros((4, 2), dtype=complex), 3, dom)
    with pytest.raises(ValueError):
        ContourWeights(np.zeros((4, 2), dtype=complex), 5, dom)
    bad = np.zeros((3, 2), dtype=complex)
    bad[0, 0] = 1.0j
    with pytest.raises(ValueError):
        ContourWeights(bad, 2, dom)
    with pytest.raises(GuardError):
        ContourWeights(np.zeros((99, 2), dtype=complex), 98, dom)


def test_reconstruct_circle_hand_weights():
    dom = EllipticDomain(e=0.05, zeta0=3.0)
    r, cx, cy = 2.0, 1.0, -0.5
    q = np.zeros((2, 2), dtype=complex)
    q[0] = (cx, cy)
    q[1] = (r / 2.0, -1j * r / 2.0)
    w = ContourWeights(q, 1, dom)
    eta = np.linspace(0.0, 2.0 * np.pi, 17, endpoint=False)
    pts = reconstruct_contour(w, eta)
    assert pts.shape == (17, 2)
    expect = np.column_stack([cx + r * np.cos(eta), cy + r * np.sin(eta)])
    assert pts == pytest.approx(expect, abs=1e-13)
    tan = contour_tangents(w, eta)
    assert np.linalg.norm(tan, axis=1) == pytest.approx(
        np.full(17, r), rel=1e-13
    )


def test_decompose_exact_ellipse_is_degree_one():
    c = ellipse_contour(a=2.0, b=0.5, n_points=64)
    w = decompose_contour(c, 12)
    assert w.residual_rms < 1e-10
    assert np.abs(w.q[2:]).max() < 1e-10
    _, eta = inverse_elliptic(w.domain, c.points)
    back = reconstruct_contour(w, eta)
    assert back == pytest.approx(c.points, abs=1e-9)


def test_decompose_blob_roundtrip():
    c = blob_contour(n_points=64)
    w = decompose_contour(c, 12)
    _, eta = inverse_elliptic(w.domain, c.points)
    back = reconstruct_contour(w, eta)
    rms = np.sqrt(((back - c.points) ** 2).sum(axis=1).mean())
    assert rms == pytest.approx(w.residual_rms, rel=1e-6)
    assert rms < 0.05 * Contour2D(points=c.points, closed=True).length()


def test_decompose_underdetermined():
    c = ellipse_contour(a=2.0, b=1.0, n_points=9)
    with pytest.raises(EngineError):
        decompose_contour(c, 5)  # 11 modes > 9 points


def test_decompose_rank_deficient():
    # 12 points in 3 tight clusters: only 3 resolvable chart angles
    t = np.concatenate(
        [base + np.arange(4) * 1e-13
         for base in (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0)]
    )
    pts = np.column_stack([2.0 * np.cos(t), 1.0 * np.sin(t)])
    with pytest.raises(EngineError):
        decompose_contour(Contour2D(points=pts, closed=True), 5)


def test_decompose_rejects_open():
    pts = ellipse_contour(a=2.0, b=1.0, n_points=32).points
    with pytest.raises(ValueError):
        decompose_contour(Contour2D(points=pts, closed=False), 4)


# ---------------------------------------------------------------------------
# remeshing

def test_remesh_equalizes_ellipse():
    w = decompose_contour(ellipse_contour(a=2.0, b=0.5, n_points=64), 12)
    out = remesh_contour(w, 64, i_max=400, std_target=0.15)
    assert out.closed
    assert out.points.shape == (64, 2)
    seg = np.linalg.norm(np.roll(out.points, -1, axis=0) - out.points, axis=1)
    start = reconstruct_contour(w, 2.0 * np.pi * np.arange(64) / 64)
    seg0 = np.linalg.norm(np.roll(start, -1, axis=0) - start, axis=1)
    assert seg.std() <= 0.15 * seg0.std()
    assert seg.sum() == pytest.approx(seg0.sum(), rel=0.01)
    assert not self_intersects(out)


def test_remesh_circle_already_converged():
    base = ellipse_contour(a=1.0, b=1.0, n_points=48)
    w = decompose_contour(base, 8)
    from equimesh.contour2d import ContourTrace

    tr = ContourTrace()
    out = remesh_contour(w, 40, trace=tr)
    assert tr.n_rows == 0  # uniform start needs no iterations
    rad = np.linalg.norm(out.points, axis=1)
    assert rad == pytest.approx(np.ones(40), rel=1e-6)


def test_remesh_is_deterministic():
    w = decompose_contour(blob_contour(n_points=64), 10)
    a = remesh_contour(w, 50, i_max=300, std_target=0.18)
    b = remesh_contour(w, 50, i_max=300, std_target=0.18)
    assert np.array_equal(a.points, b.points)


def test_remesh_validation():
    w = decompose_contour(ellipse_contour(n_points=32), 6)
    with pytest.raises(ValueError):
        remesh_contour(w, MIN_SEGMENTS - 1)
    with pytest.raises(ValueError):
        remesh_contour(w, 20, i_max=0)


def test_remesh_budget_failure_carries_trace():
    w = decompose_contour(ellipse_contour(a=5.0, b=0.2, n_points=64), 8)
    with pytest.raises(EngineError) as exc:
        remesh_contour(w, 48, i_max=1, std_target=0.05)
    assert exc.value.trace.n_rows == 1


def test_trace_csv(tmp_path):
    from equimesh.contour2d import ContourTrace

    tr = ContourTrace()
    w = decompose_contour(ellipse_contour(a=2.0, b=0.8, n_points=48), 8)
    remesh_contour(w, 40, i_max=300, std_target=0.5, trace=tr)
    assert tr.n_rows >= 1
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,dt,std_length,mean_length,total_length"
    assert len(lines) == tr.n_rows + 1


# ---------------------------------------------------------------------------
# batch remeshing

def test_segment_budgets_hand_values():
    budgets = segment_budgets([1.0, 2.0, 3.0], 21)
    assert list(budgets) == [5, 13, 21]
    assert list(segment_budgets([4.0, 4.0], 30)) == [30, 30]
    with pytest.raises(ValueError):
        segment_budgets([1.0], 4)
    with pytest.raises(ValueError):
        segment_budgets([], 20)


def test_self_intersects():
    square = Contour2D(
        points=np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        closed=True,
    )
    assert not self_intersects(square)
    bowtie = Contour2D(
        points=np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),
        closed=True,
    )
    assert self_intersects(bowtie)


def test_microstructure_batch_scales_budgets():
    contours = [
        ellipse_contour(a=1.0, b=0.6, n_points=48),
        ellipse_contour(a=3.0, b=1.8, n_points=48),
    ]
    out = remesh_microstructure_2d(contours, 40, n_max=8, i_max=300)
    assert len(out) == 2
    lengths = [Contour2D(points=c.points, closed=True).length()
               for c in contours]
    budgets = segment_budgets(lengths, 40)
    assert out[0].points.shape[0] == budgets[0]
    assert out[1].points.shape[0] == budgets[1] == 40


def test_microstructure_workers_match_serial():
    contours = [
        ellipse_contour(a=1.0, b=0.5, n_points=48),
        blob_contour(n_points=64),
        ellipse_contour(a=2.0, b=1.5, n_points=48),
    ]
    serial = remesh_microstructure_2d(contours, 30, n_max=8, i_max=300)
    parallel = remesh_microstructure_2d(contours, 30, n_max=8, i_max=300,
                                        workers=3)
    for a, b in zip(serial, parallel):
        assert np.array_equal(a.points, b.points)


def test_microstructure_reports_intersecting_particles():
    with pytest.raises(IntersectionError) as exc:
        remesh_microstructure_2d([star_contour()], 30, n_max=4, i_max=300)
    assert exc.value.particle_ids == [0]


def test_microstructure_empty_batch():
    with pytest.raises(ValueError):
        remesh_microstructure_2d([], 30, n_max=4)


# ---------------------------------------------------------------------------
# contour files

def test_contour_csv_roundtrip(tmp_path):
    c = blob_contour(n_points=32)
    path = tmp_path / "c.csv"
    write_contour_csv(c, path)
    back = read_contour_csv(path)
    assert np.array_equal(back.points, c.points)
    assert back.closed


def test_contour_csv_headerless_and_comments(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("# a square\n0 0\n1,0\n\n1 1\n0 1\n")
    c = read_contour_csv(path)
    assert c.points.shape == (4, 2)
    assert c.points[1] == pytest.approx([1.0, 0.0])


def test_contour_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("x,y\n0,0\n1,oops\n2,2\n")
    with pytest.raises(FormatError):
        read_contour_csv(p)
    p.write_text("x,y\n0,0\n1,1\n")
    with pytest.raises(FormatError):
        read_contour_csv(p)  # fewer than 3 points
    with pytest.raises(FormatError):
        read_contour_csv(tmp_path / "missing.csv")


def test_contours_document_roundtrip(tmp_path):
    named = [
        ("p1", ellipse_contour(a=1.0, b=0.5, n_points=12)),
        ("grain-7", blob_contour(n_points=16)),
    ]
    path = tmp_path / "all.txt"
    write_contours(named, path)
    back = read_contours(path)
    assert [pid for pid, _ in back] == ["p1", "grain-7"]
    for (_, got), (_, want) in zip(back, named):
        assert np.array_equal(got.points, want.points)


def test_contours_document_errors(tmp_path):
    p = tmp_path / "doc.txt"
    p.write_text("not contours\n")
    with pytest.raises(FormatError):
        read_contours(p)
    p.write_text("contours v1\ncount two\n")
    with pytest.raises(FormatError):
        read_contours(p)
    p.write_text("contours v1\ncount 1\ncontour p1 4\n0 0\n1 0\n")
    with pytest.raises(FormatError):
        read_contours(p)  # truncated points
    p.write_text("contours v1\ncount 1\nsegment p1 3\n0 0\n1 0\n0 1\n")
    with pytest.raises(FormatError):
        read_contours(p)
    with pytest.raises(ValueError):
        write_contours([("has space", blob_contour(16))], tmp_path / "x.txt")
