"""Planar counterpart of the surface pipeline.

Closed contours are parameterized by the elliptic angle eta of a fitted
confocal ellipse, expanded in a periodic Fourier basis, and re-sampled by
1D diffusion of the eta samples until segment lengths equalize. A batch
driver applies this per particle for 2D microstructures.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    EngineError,
    FormatError,
    GuardError,
    IntersectionError,
    SingularityError,
)
from .harmonics import MAX_DEGREE
from .mesh import Contour2D

__all__ = [
    "MIN_SEGMENTS",
    "EllipticDomain",
    "ContourWeights",
    "ContourTrace",
    "elliptic_coords",
    "inverse_elliptic",
    "fit_ellipse",
    "decompose_contour",
    "reconstruct_contour",
    "contour_tangents",
    "remesh_contour",
    "segment_budgets",
    "remesh_microstructure_2d",
    "self_intersects",
    "read_contour_csv",
    "write_contour_csv",
    "read_contours",
    "write_contours",
]

MIN_SEGMENTS = 5

# mirror the 3D near-sphere fallback: floor e at 5% of the long semi-axis
_CIRCLE_GAP = 1e-3
_CIRCLE_FOCAL_FRACTION = 0.05

_MAX_DT_HALVINGS = 20


@dataclass(frozen=True)
class EllipticDomain:
    """Confocal elliptic chart: shell ellipse plus its rigid placement."""

    e: float
    zeta0: float
    center: tuple = (0.0, 0.0)
    rotation: float = 0.0

    def __post_init__(self):
        if not (self.e > 0.0 and np.isfinite(self.e)):
            raise ValueError("focal distance e must be positive")
        if not (self.zeta0 > 0.0 and np.isfinite(self.zeta0)):
            raise ValueError("zeta0 must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 2:
            raise ValueError("center must be a 2-vector")

    def semi_axes(self):
        return (
            self.e * np.cosh(self.zeta0),
            self.e * np.sinh(self.zeta0),
        )

    def _rotation_matrix(self):
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        return np.array([[c, -s], [s, c]])


def elliptic_coords(domain, eta, zeta=None):
    """Points on the shell ellipse at angles eta, in world coordinates."""
    eta = np.asarray(eta, dtype=float)
    z0 = domain.zeta0 if zeta is None else zeta
    local = np.column_stack(
        [
            domain.e * np.cosh(z0) * np.cos(eta),
            domain.e * np.sinh(z0) * np.sin(eta),
        ]
    )
    return local @ domain._rotation_matrix().T + np.asarray(domain.center)


def inverse_elliptic(domain, points, singular_tol=1e-8):
    """Elliptic chart coordinates (zeta, eta) of world points.

    eta is wrapped to [0, 2*pi). Points on the focal segment have an
    ambiguous angle and raise SingularityError.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    local = (pts - np.asarray(domain.center)) @ domain._rotation_matrix()
    w = np.arccosh((local[:, 0] + 1j * local[:, 1]) / domain.e)
    zeta = np.real(w)
    if np.any(np.abs(zeta) < singular_tol):
        raise SingularityError(
            "point lies on the focal segment; its elliptic angle is ambiguous"
        )
    eta = np.mod(np.imag(w), 2.0 * np.pi)
    eta[eta >= 2.0 * np.pi] = 0.0
    return zeta, eta


def fit_ellipse(contour):
    """Second-moment ellipse of a closed contour as an EllipticDomain.

    Center and covariance come from the vertices; the principal axis sets
    the rotation. Near-circles get the focal-distance floor so the chart
    stays nondegenerate.
    """
    if not contour.closed:
        raise ValueError("ellipse fitting expects a closed contour")
    pts = contour.points
    center = pts.mean(axis=0)
    v = pts - center
    cov = v.T @ v / v.shape[0]
    evals, evecs = np.linalg.eigh(cov)  # ascending
    a = float(np.sqrt(2.0 * max(evals[1], 0.0)))
    b = float(np.sqrt(2.0 * max(evals[0], 0.0)))
    if a <= 0.0:
        raise ValueError("contour is degenerate (zero extent)")
    major = evecs[:, 1]
    # canonical sign keeps the fit deterministic under vertex order
    if major[0] < 0.0 or (major[0] == 0.0 and major[1] < 0.0):
        major = -major
    rotation = float(np.arctan2(major[1], major[0]))
    if (a - b) / a < _CIRCLE_GAP:
        e = _CIRCLE_FOCAL_FRACTION * a
        zeta0 = float(np.arccosh(a / e))
    else:
        e = float(np.sqrt(a * a - b * b))
        zeta0 = float(np.arctanh(b / a))
    return EllipticDomain(
        e=e, zeta0=zeta0, center=(center[0], center[1]), rotation=rotation
    )


@dataclass
class ContourWeights:
    """Fourier weights of x(eta), y(eta): complex (n_max + 1, 2), m >= 0.

    Negative orders are implied by conjugate symmetry, so row 0 is real.
    """

    q: np.ndarray
    n_max: int
    domain: EllipticDomain
    residual_rms: float | None = None

    def __post_init__(self):
        q = np.ascontiguousarray(self.q, dtype=np.complex128)
        if not (0 <= int(self.n_max) <= MAX_DEGREE):
            raise GuardError(f"n_max must be in [0, {MAX_DEGREE}]")
        if q.shape != (self.n_max + 1, 2):
            raise ValueError(
                f"weights must have shape ({self.n_max + 1}, 2)"
            )
        if q.shape[0] and np.abs(q[0].imag).max(initial=0.0) > 1e-12:
            raise ValueError("degree-0 weights must be real")
        self.q = q


def _fourier_matrix(eta, n_max):
    """Full complex basis e^{i m eta}, m = -n_max .. n_max, (n, 2*n_max+1)."""
    m = np.arange(-n_max, n_max + 1)
    return np.exp(1j * np.outer(eta, m))


def decompose_contour(contour, n_max):
    """Least-squares Fourier weights of a closed contour.

    Each vertex is assigned the elliptic angle of the fitted ellipse chart
    (the planar analogue of the surface projection); the fit then solves
    for x(eta), y(eta). Requires at least 2*n_max + 1 points.
    """
    if not contour.closed:
        raise ValueError("decomposition expects a closed contour")
    if not (0 <= n_max <= MAX_DEGREE):
        raise GuardError(f"n_max must be in [0, {MAX_DEGREE}]")
    n_pts = contour.points.shape[0]
    n_modes = 2 * n_max + 1
    if n_pts < n_modes:
        raise EngineError(
            f"underdetermined contour fit: {n_pts} points < {n_modes} modes"
        )
    domain = fit_ellipse(contour)
    _, eta = inverse_elliptic(domain, contour.points)
    B = _fourier_matrix(eta, n_max)
    target = contour.points.astype(np.complex128)
    q_full, _, rank, _ = np.linalg.lstsq(B, target, rcond=None)
    if rank < n_modes:
        raise EngineError(
            "rank-deficient contour fit: sample angles do not resolve the "
            f"requested degree {n_max}"
        )
    # fold onto the conjugate-consistent half spectrum
    pos = q_full[n_max:]
    neg = q_full[n_max::-1]
    q = 0.5 * (pos + np.conj(neg))
    q[0] = q[0].real
    resid = np.abs(B @ q_full - target) ** 2
    residual_rms = float(np.sqrt(resid.sum(axis=1).mean()))
    return ContourWeights(
        q=q, n_max=n_max, domain=domain, residual_rms=residual_rms
    )


def reconstruct_contour(weights, eta):
    """Evaluate the contour at angles eta; returns (n, 2) points."""
    eta = np.asarray(eta, dtype=float)
    m = np.arange(weights.n_max + 1)
    phase = np.exp(1j * np.outer(eta, m))
    scale = np.where(m == 0, 1.0, 2.0)[:, None]
    return (phase @ (weights.q * scale)).real


def contour_tangents(weights, eta):
    """d(point)/d(eta) of the reconstruction — the local chart speed."""
    eta = np.asarray(eta, dtype=float)
    m = np.arange(weights.n_max + 1)
    phase = np.exp(1j * np.outer(eta, m)) * (1j * m)
    scale = np.where(m == 0, 1.0, 2.0)[:, None]
    return (phase @ (weights.q * scale)).real


@dataclass
class ContourTrace:
    """Per-iteration log of a 1D remeshing run."""

    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    std_length: list = field(default_factory=list)
    mean_length: list = field(default_factory=list)
    total_length: list = field(default_factory=list)
    initial_std_length: float = float("nan")
    initial_mean_length: float = float("nan")

    @property
    def n_rows(self):
        return len(self.t)

    def append(self, t, dt, std_length, mean_length, total_length):
        self.t.append(int(t))
        self.dt.append(float(dt))
        self.std_length.append(float(std_length))
        self.mean_length.append(float(mean_length))
        self.total_length.append(float(total_length))

    def to_csv(self, path):
        lines = ["t,dt,std_length,mean_length,total_length"]
        for i in range(self.n_rows):
            lines.append(
                f"{self.t[i]},{self.dt[i]:.17g},{self.std_length[i]:.17g},"
                f"{self.mean_length[i]:.17g},{self.total_length[i]:.17g}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


def _ring_segments(points):
    return np.linalg.norm(np.roll(points, -1, axis=0) - points, axis=1)


def _cyclic_increasing(eta):
    """True when the angles wind once around the circle without crossing."""
    d = np.mod(np.diff(eta, append=eta[:1] + 2.0 * np.pi), 2.0 * np.pi)
    return bool(np.all(d > 0.0) and abs(d.sum() - 2.0 * np.pi) < 1e-9)


def remesh_contour(weights, n_points, i_max=200, std_target=0.2, trace=None):
    """Equalize segment lengths by 1D diffusion of the eta samples.

    Starts from uniform angles, diffuses the per-sample segment-length
    density one implicit step at a time, and advects samples up the
    diffused gradient. Succeeds when the segment-length STD falls to
    std_target times the initial STD (or is negligible against the mean);
    raises EngineError with the trace attached otherwise.
    """
    if n_points < MIN_SEGMENTS:
        raise ValueError(f"need at least {MIN_SEGMENTS} points")
    if i_max < 1:
        raise ValueError("i_max must be at least 1")
    if trace is None:
        trace = ContourTrace()
    eta = 2.0 * np.pi * np.arange(n_points) / n_points
    points = reconstruct_contour(weights, eta)
    seg = _ring_segments(points)
    std_initial = float(seg.std())
    trace.initial_std_length = std_initial
    trace.initial_mean_length = float(seg.mean())
    # a uniform start (circle-like weights) is already converged
    goal = max(std_target * std_initial, 1e-3 * float(seg.mean()))

    for t in range(1, i_max + 1):
        if float(seg.std()) <= goal:
            break
        # per-sample density: half of each adjacent segment, normalized
        masses = 0.5 * (seg + np.roll(seg, 1))
        u = masses / masses.sum()
        h = float(seg.mean())
        dt = 0.5 * h * h
        w = 1.0 / seg  # conductance of the edge to the next sample
        accepted = False
        for _ in range(_MAX_DT_HALVINGS + 1):
            # implicit ring-diffusion step: (M - dt L) u' = M u
            u_new = _ring_implicit_step(masses, w, u, dt)
            # centered arc-length gradient of the diffused density
            grad = (np.roll(u_new, -1) - np.roll(u_new, 1)) / (
                seg + np.roll(seg, 1)
            )
            speed = np.linalg.norm(contour_tangents(weights, eta), axis=1)
            d_eta = dt * grad / np.maximum(u_new, 1e-15) / np.maximum(
                speed, 1e-15
            )
            cand = np.mod(eta + d_eta, 2.0 * np.pi)
            if _cyclic_increasing(cand):
                accepted = True
                break
            dt *= 0.5
        if not accepted:
            exc = EngineError(
                f"sample ordering could not be preserved at iteration {t}"
            )
            exc.trace = trace
            raise exc
        eta = cand
        points = reconstruct_contour(weights, eta)
        seg = _ring_segments(points)
        trace.append(t, dt, float(seg.std()), float(seg.mean()), float(seg.sum()))

    if float(seg.std()) > goal:
        exc = EngineError(
            f"segment spread {seg.std():.3e} still above target {goal:.3e} "
            f"after {i_max} iterations"
        )
        exc.trace = trace
        raise exc
    return Contour2D(points=points, closed=True)


def _ring_implicit_step(masses, conductance, u, dt):
    """Backward Euler on the periodic chain with given edge conductances.

    Solves (M - dt L) u' = M u with L the ring Laplacian; the system is
    symmetric positive definite and cyclic tridiagonal, solved densely via
    its banded structure (problem sizes here are tiny).
    """
    n = u.shape[0]
    L = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    L[idx, nxt] += conductance
    L[nxt, idx] += conductance
    L[idx, idx] -= conductance + np.roll(conductance, 1)
    S = np.diag(masses) - dt * L
    return np.linalg.solve(S, masses * u)


def segment_budgets(lengths, max_segments_largest):
    """Per-particle segment counts: linear in contour length from
    MIN_SEGMENTS (shortest) to max_segments_largest (longest)."""
    if max_segments_largest < MIN_SEGMENTS:
        raise ValueError(
            f"largest budget must be at least {MIN_SEGMENTS}"
        )
    lengths = np.asarray(lengths, dtype=float)
    if lengths.size == 0:
        raise ValueError("need at least one contour")
    lo, hi = float(lengths.min()), float(lengths.max())
    if hi == lo:
        return np.full(lengths.shape, int(max_segments_largest), dtype=int)
    frac = (lengths - lo) / (hi - lo)
    budgets = np.rint(MIN_SEGMENTS + frac * (max_segments_largest - MIN_SEGMENTS))
    return budgets.astype(int)


def self_intersects(contour):
    """True when any two non-adjacent segments of the closed contour cross."""
    pts = contour.points
    n = pts.shape[0]
    a = pts
    b = np.roll(pts, -1, axis=0)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (
            q[..., 1] - p[..., 1]
        ) * (r[..., 0] - p[..., 0])

    for i in range(n - 2):
        # segments adjacent to i share an endpoint and cannot properly cross
        j = np.arange(i + 2, n if i > 0 else n - 1)
        o1 = orient(a[i], b[i], a[j])
        o2 = orient(a[i], b[i], b[j])
        o3 = orient(a[j], b[j], a[i])
        o4 = orient(a[j], b[j], b[i])
        if np.any((o1 * o2 < 0.0) & (o3 * o4 < 0.0)):
            return True
    return False


def remesh_microstructure_2d(
    contours, max_segments_largest, n_max, i_max=200, workers=1
):
    """Independently remesh each particle with a length-scaled budget.

    The per-particle degree is lowered when a small contour cannot support
    the requested n_max. Jobs are independent, so `workers` > 1 fans them
    out to a thread pool; results keep the input ordering either way.
    Self-intersecting outputs abort the batch with the offending particle
    indices.
    """
    if len(contours) == 0:
        raise ValueError("need at least one contour")
    lengths = [c.length() for c in contours]
    budgets = segment_budgets(lengths, max_segments_largest)

    def job(item):
        contour, budget = item
        n_pts = contour.points.shape[0]
        degree = min(n_max, (n_pts - 1) // 2)
        weights = decompose_contour(contour, degree)
        return remesh_contour(weights, int(budget), i_max=i_max)

    items = list(zip(contours, budgets))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(job, items))
    else:
        out = [job(item) for item in items]
    bad = [k for k, c in enumerate(out) if self_intersects(c)]
    if bad:
        raise IntersectionError(
            f"remeshed contours self-intersect: particles {bad}",
            particle_ids=bad,
        )
    return out


# ---------------------------------------------------------------------------
# contour files

def read_contour_csv(path):
    """Single contour from a CSV of x,y rows (header optional)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    rows = []
    for ln, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        if ln == 1 and any(not _is_float(p) for p in parts):
            continue  # header row
        if len(parts) != 2 or not all(_is_float(p) for p in parts):
            raise FormatError(f"{path}:{ln}: expected two numbers per row")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) < 3:
        raise FormatError(f"{path}: a contour needs at least 3 points")
    return Contour2D(points=np.array(rows), closed=True)


def write_contour_csv(contour, path):
    lines = ["x,y"]
    for x, y in contour.points:
        lines.append(f"{x:.17g},{y:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def _is_float(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


_CONTOURS_MAGIC = "contours v1"


def read_contours(path):
    """Multi-contour document: list of (particle_id, Contour2D)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _CONTOURS_MAGIC:
        raise FormatError(f"{path}: not a contours document")
    if len(lines) < 2 or not lines[1].startswith("count "):
        raise FormatError(f"{path}: missing contour count")
    try:
        count = int(lines[1].split()[1])
    except (IndexError, ValueError) as exc:
        raise FormatError(f"{path}: bad contour count") from exc
    out = []
    idx = 2
    for _ in range(count):
        if idx >= len(lines):
            raise FormatError(f"{path}: truncated document")
        parts = lines[idx].split()
        if len(parts) != 3 or parts[0] != "contour":
            raise FormatError(f"{path}: expected 'contour <id> <n>' header")
        pid = parts[1]
        try:
            n = int(parts[2])
        except ValueError as exc:
            raise FormatError(f"{path}: bad point count for {pid}") from exc
        idx += 1
        if idx + n > len(lines):
            raise FormatError(f"{path}: contour {pid} is truncated")
        pts = np.empty((n, 2))
        for k in range(n):
            vals = lines[idx + k].split()
            if len(vals) != 2 or not all(_is_float(v) for v in vals):
                raise FormatError(
                    f"{path}: contour {pid} row {k} is not two numbers"
                )
            pts[k] = (float(vals[0]), float(vals[1]))
        idx += n
        out.append((pid, Contour2D(points=pts, closed=True)))
    return out


def write_contours(named_contours, path):
    lines = [_CONTOURS_MAGIC, f"count {len(named_contours)}"]
    for pid, contour in named_contours:
        if " " in str(pid):
            raise ValueError("particle ids must not contain spaces")
        pts = contour.points
        lines.append(f"contour {pid} {pts.shape[0]}")
        for x, y in pts:
            lines.append(f"{x:.17g} {y:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")
