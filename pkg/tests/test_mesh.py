import numpy as np
import pytest

from equimesh import (
    Contour2D,
    TopologyError,
    TriangleMesh,
    area_density,
    compare_surfaces,
    detect_normal_flips,
    face_metrics,
    icosphere,
    load_mesh,
    quality_report,
    save_mesh,
    vertex_voronoi_areas,
)


def tetrahedron():
    # regular tetrahedron, all faces equilateral with edge 2*sqrt(2)
    v = np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float
    )
    f = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]])
    return TriangleMesh(v, f)


def single_triangle(vertices):
    return TriangleMesh(np.asarray(vertices, dtype=float), [[0, 1, 2]])


# ---------------------------------------------------------------------------
# construction and topology


def test_tetrahedron_is_closed():
    m = tetrahedron()
    assert m.is_closed
    assert m.boundary_loop() is None
    assert m.euler_characteristic() == 2


def test_single_triangle_boundary_loop():
    m = single_triangle([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert not m.is_closed
    loop = m.boundary_loop()
    assert sorted(loop) == [0, 1, 2]


def test_rejects_out_of_range_face_index():
    with pytest.raises(ValueError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 3]])


def test_rejects_degenerate_face():
    with pytest.raises(ValueError):
        TriangleMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 1]])


def test_rejects_inconsistent_orientation():
    # two triangles sharing edge (1,2) traversed the same way twice
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]
    f = [[0, 1, 2], [3, 1, 2]]
    with pytest.raises(TopologyError):
        TriangleMesh(v, f)


def test_rejects_nonmanifold_edge():
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, -1, 0]]
    f = [[0, 1, 2], [1, 0, 3], [0, 1, 4]]
    with pytest.raises(TopologyError):
        TriangleMesh(v, f)


def test_rejects_two_boundary_loops():
    # two disjoint triangles: connected components aside, two boundary loops
    v = [
        [0, 0, 0], [1, 0, 0], [0, 1, 0],
        [10, 0, 0], [11, 0, 0], [10, 1, 0],
    ]
    f = [[0, 1, 2], [3, 4, 5]]
    with pytest.raises(TopologyError):
        TriangleMesh(v, f)


def test_vertices_are_readonly():
    m = tetrahedron()
    with pytest.raises((ValueError, RuntimeError)):
        m.vertices[0, 0] = 99.0


def test_with_vertices_keeps_connectivity():
    m = tetrahedron()
    m2 = m.with_vertices(m.vertices * 2.0)
    assert np.array_equal(m.faces, m2.faces)
    assert m2.total_area() == pytest.approx(4.0 * m.total_area())


# ---------------------------------------------------------------------------
# icosphere


@pytest.mark.parametrize("r", [0, 1, 2, 3])
def test_icosphere_counts(r):
    m = icosphere(r)
    assert m.n_v == 10 * 4**r + 2
    assert m.n_f == 20 * 4**r


def test_icosphere_vertices_on_unit_sphere():
    verts = icosphere(3).vertices
    radii = np.linalg.norm(verts, axis=1)
    np.testing.assert_allclose(radii, 1.0, atol=1e-12)


def test_icosphere_valid_closed_mesh():
    m = icosphere(2)
    assert m.is_closed
    assert m.euler_characteristic() == 2


# ---------------------------------------------------------------------------
# metrics


def test_face_metrics_equilateral():
    """Unit-edge equilateral triangle: area sqrt(3)/4, rho_hat exactly 1."""
    m = single_triangle([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]])
    areas, normals, rho = face_metrics(m)
    assert areas[0] == pytest.approx(np.sqrt(3) / 4, rel=1e-14)
    np.testing.assert_allclose(normals[0], [0, 0, 1], atol=1e-14)
    assert abs(rho[0] - 1.0) <= 1e-12


def test_rho_hat_grows_for_needle_face():
    # a needle: circumradius blows up against the mean edge
    m = single_triangle([[0, 0, 0], [1, 0, 0], [0.5, 1e-5, 0]])
    _, _, rho = face_metrics(m)
    assert rho[0] > 100.0


def test_rho_hat_lower_bound(unit_sphere_2):
    _, _, rho = face_metrics(unit_sphere_2)
    # 1 is the equilateral minimum; allow only rounding below it
    assert rho.min() >= 1.0 - 1e-12
    assert rho.max() < 2.0


def test_voronoi_equilateral_thirds():
    m = single_triangle([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]])
    w = vertex_voronoi_areas(m)
    np.testing.assert_allclose(w, m.total_area() / 3.0, rtol=1e-12)


def test_voronoi_right_triangle_hand_values():
    """Right isoceles triangle, circumcenter at hypotenuse midpoint.

    The Voronoi cell of the right-angle vertex is the quarter square
    [0, .5]^2 (area 1/4); each acute vertex gets a 1/8 triangle.
    """
    m = single_triangle([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    w = vertex_voronoi_areas(m)
    np.testing.assert_allclose(w, [0.25, 0.125, 0.125], atol=1e-12)


def test_voronoi_conserves_total_area(unit_sphere_2):
    w = vertex_voronoi_areas(unit_sphere_2)
    assert w.sum() == pytest.approx(unit_sphere_2.total_area(), rel=1e-12)
    assert (w > 0).all()


def test_area_density_normalized(unit_sphere_2):
    u = area_density(unit_sphere_2)
    assert u.sum() == pytest.approx(1.0, rel=1e-12)


def test_detect_normal_flips():
    m = tetrahedron()
    _, normals, _ = face_metrics(m)
    assert detect_normal_flips(m, normals).size == 0
    flipped = normals.copy()
    flipped[2] *= -1.0
    assert detect_normal_flips(m, flipped).tolist() == [2]


def test_compare_surfaces_identity(unit_sphere_2):
    d, a, b = compare_surfaces(unit_sphere_2, unit_sphere_2)
    assert d <= 1e-14
    assert a == b


def test_compare_surfaces_offset_spheres():
    ma = icosphere(3)
    mb = ma.with_vertices(ma.vertices * 1.1)
    d, _, _ = compare_surfaces(ma, mb)
    # concentric spheres 1.0 and 1.1: nearest-distance is about 0.1
    assert d == pytest.approx(0.1, rel=0.05)


def test_quality_report_summary(unit_sphere_2, tmp_path):
    rep = quality_report(unit_sphere_2)
    assert rep.mean_rho_hat >= 1.0 - 1e-12
    assert rep.area_density.shape[0] == unit_sphere_2.n_v
    lines = rep.summary_lines()
    assert any("rho_hat" in ln for ln in lines)
    out = tmp_path / "quality.csv"
    rep.to_csv(out)
    text = out.read_text().splitlines()
    assert text[0] == "kind,index,area,rho_hat,area_density"
    assert len(text) == 1 + unit_sphere_2.n_f + unit_sphere_2.n_v


# ---------------------------------------------------------------------------
# file round-trips


@pytest.mark.parametrize("ext", ["obj", "off", "ply"])
def test_mesh_roundtrip(tmp_path, ext):
    m = icosphere(1)
    path = tmp_path / f"sphere.{ext}"
    save_mesh(m, path)
    back = load_mesh(path)
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-12)
    assert np.array_equal(back.faces, m.faces)


def test_load_mesh_format_override(tmp_path):
    m = icosphere(0)
    path = tmp_path / "mesh.dat"
    save_mesh(m, path, fmt="obj")
    back = load_mesh(path, fmt="obj")
    assert back.n_v == m.n_v


def test_load_mesh_rejects_garbage(tmp_path):
    from equimesh import FormatError

    path = tmp_path / "bad.obj"
    path.write_text("v 0 0\nf 1 2\n")
    with pytest.raises(FormatError):
        load_mesh(path)


# ---------------------------------------------------------------------------
# contours


def test_contour_segment_lengths():
    c = Contour2D(np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float))
    np.testing.assert_allclose(c.segment_lengths(), 1.0)
    assert c.length() == pytest.approx(4.0)


def test_contour_rejects_repeated_point():
    with pytest.raises(ValueError):
        Contour2D(np.array([[0, 0], [0, 0], [1, 1]], dtype=float))


def test_contour_rejects_too_few_points():
    with pytest.raises(ValueError):
        Contour2D(np.array([[0, 0], [1, 0]], dtype=float))
