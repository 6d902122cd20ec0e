"""Spheroidal coordinate charts: forward/inverse maps, domain fitting, sampling.

A spheroid shell is parameterized by (eta, phi) at a fixed radial coordinate
zeta0. Oblate and prolate families share one complex-arccosh inversion; the
hemispheroidal variants restrict eta to the upper half range and keep a small
offset between sampling points and the open rim.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FoldError, SingularityError, TopologyError
from .mesh import TriangleMesh, icosphere

__all__ = [
    "OBLATE",
    "PROLATE",
    "OBLATE_HEMISPHEROID",
    "PROLATE_HEMISPHEROID",
    "KINDS",
    "SpheroidDomain",
    "CurvilinearCoords",
    "forward_coords",
    "inverse_coords",
    "pullback",
    "xi_of_eta",
    "fit_domain",
    "align_to_principal_axes",
    "map_to_domain",
    "surface_normals",
    "sample_icosphere",
    "sample_cap_grid",
]

OBLATE = "oblate"
PROLATE = "prolate"
OBLATE_HEMISPHEROID = "oblate-hemispheroid"
PROLATE_HEMISPHEROID = "prolate-hemispheroid"
KINDS = (OBLATE, PROLATE, OBLATE_HEMISPHEROID, PROLATE_HEMISPHEROID)

# relative semi-axis gap below which a shape counts as a sphere and the
# focal distance is floored at 5% of the equatorial radius
SPHERE_GAP = 1e-3
SPHERE_FOCAL_FRACTION = 0.05

DEFAULT_EPS_ETA = 1e-3


@dataclass(frozen=True)
class SpheroidDomain:
    """A confocal spheroid family member: kind, focal distance, shell radius."""

    kind: str
    e: float
    zeta0: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown spheroid kind {self.kind!r}")
        if not (self.e > 0.0 and np.isfinite(self.e)):
            raise ValueError("focal distance e must be positive and finite")
        if not (self.zeta0 > 0.0 and np.isfinite(self.zeta0)):
            raise ValueError("shell coordinate zeta0 must be positive and finite")

    @property
    def is_hemispheroid(self):
        return self.kind in (OBLATE_HEMISPHEROID, PROLATE_HEMISPHEROID)

    @property
    def is_oblate_family(self):
        return self.kind in (OBLATE, OBLATE_HEMISPHEROID)

    @property
    def eta_range(self):
        """Closed eta interval of the chart."""
        if self.kind == OBLATE:
            return (-np.pi / 2.0, np.pi / 2.0)
        if self.kind == PROLATE:
            return (0.0, np.pi)
        return (0.0, np.pi / 2.0)

    @property
    def rim_eta(self):
        """eta value of the open rim, or None for closed kinds."""
        if self.kind == OBLATE_HEMISPHEROID:
            return 0.0  # equator; the pole sits at eta = pi/2
        if self.kind == PROLATE_HEMISPHEROID:
            return np.pi / 2.0  # equator; the pole sits at eta = 0
        return None

    def semi_axes(self):
        """(equatorial, polar) radii of the shell."""
        if self.is_oblate_family:
            return self.e * np.cosh(self.zeta0), self.e * np.sinh(self.zeta0)
        return self.e * np.sinh(self.zeta0), self.e * np.cosh(self.zeta0)


@dataclass
class CurvilinearCoords:
    """Per-vertex surface coordinates (eta, phi) bound to a domain."""

    eta: np.ndarray
    phi: np.ndarray
    domain: SpheroidDomain

    def __post_init__(self):
        eta = np.ascontiguousarray(self.eta, dtype=np.float64)
        phi = np.ascontiguousarray(self.phi, dtype=np.float64)
        if eta.shape != phi.shape or eta.ndim != 1:
            raise ValueError("eta and phi must be matching 1-D arrays")
        lo, hi = self.domain.eta_range
        tol = 1e-9
        if eta.size and (eta.min() < lo - tol or eta.max() > hi + tol):
            raise ValueError(
                f"eta outside [{lo:.6f}, {hi:.6f}] for kind {self.domain.kind!r}"
            )
        if phi.size and (phi.min() < -tol or phi.max() >= 2.0 * np.pi + tol):
            raise ValueError("phi must lie in [0, 2*pi)")
        eta.setflags(write=False)
        phi.setflags(write=False)
        self.eta = eta
        self.phi = phi

    @property
    def n(self):
        return self.eta.shape[0]


def _wrap_phi(phi):
    phi = np.mod(phi, 2.0 * np.pi)
    # mod can return 2*pi for tiny negative inputs
    phi[phi >= 2.0 * np.pi] = 0.0
    return phi


def forward_coords(domain, eta, phi, zeta=None):
    """Map (eta, phi) on the shell (or at an explicit zeta) to 3-space.

    Returns an (n, 3) array.
    """
    eta = np.asarray(eta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    z0 = domain.zeta0 if zeta is None else zeta
    if domain.is_oblate_family:
        rho = domain.e * np.cosh(z0) * np.cos(eta)
        z = domain.e * np.sinh(z0) * np.sin(eta)
    else:
        rho = domain.e * np.sinh(z0) * np.sin(eta)
        z = domain.e * np.cosh(z0) * np.cos(eta)
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


def inverse_coords(domain, points, singular_tol=1e-8):
    """Analytic inversion of the spheroidal chart.

    Parameters
    ----------
    domain : SpheroidDomain
    points : (n, 3) array
    singular_tol : float
        Minimum |zeta|; points closer to the focal set than this have an
        ambiguous eta and raise SingularityError.

    Returns
    -------
    zeta, eta, phi : 1-D arrays; phi wrapped to [0, 2*pi).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[None, :]
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    rho = np.hypot(x, y)
    if domain.is_oblate_family:
        w = np.arccosh((rho + 1j * z) / domain.e)
    else:
        w = np.arccosh((z + 1j * rho) / domain.e)
    zeta = np.real(w)
    eta = np.imag(w)
    if np.any(np.abs(zeta) < singular_tol):
        raise SingularityError(
            "point lies on the singular focal set (zeta below tolerance); "
            "eta is ambiguous there"
        )
    phi = _wrap_phi(np.arctan2(y, x))
    return zeta, eta, phi


def pullback(domain, points):
    """Project 3-space points radially (in zeta) onto the shell zeta = zeta0."""
    _, eta, phi = inverse_coords(domain, points)
    lo, hi = domain.eta_range
    eta = np.clip(eta, lo, hi)
    return CurvilinearCoords(eta=eta, phi=phi, domain=domain)


def xi_of_eta(domain, eta):
    """Substitution variable feeding the Legendre basis.

    oblate: sin(eta); prolate: cos(eta); oblate hemispheroid: 2*sin(eta)-1;
    prolate hemispheroid: 1-cos(eta).
    """
    eta = np.asarray(eta, dtype=float)
    if domain.kind == OBLATE:
        return np.sin(eta)
    if domain.kind == PROLATE:
        return np.cos(eta)
    if domain.kind == OBLATE_HEMISPHEROID:
        return 2.0 * np.sin(eta) - 1.0
    return 1.0 - np.cos(eta)


def surface_normals(domain, eta, phi):
    """Outward unit normals of the shell at (eta, phi); pole-safe."""
    pts = forward_coords(domain, eta, phi)
    a, c = domain.semi_axes()
    n = pts / np.array([a * a, a * a, c * c])
    norm = np.linalg.norm(n, axis=1)
    norm[norm == 0.0] = 1.0
    return n / norm[:, None]


# ---------------------------------------------------------------------------
# fitting

def _as_points(mesh_or_points):
    if isinstance(mesh_or_points, TriangleMesh):
        return mesh_or_points.vertices, mesh_or_points
    pts = np.asarray(mesh_or_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("expected a TriangleMesh or an (n, 3) point array")
    return pts, None


def align_to_principal_axes(mesh):
    """Center a mesh on its vertex centroid and rotate principal axes onto x/y/z.

    The axis whose variance is most separated from the other two (the
    spheroid symmetry axis) goes to z. Determinant of the rotation is kept
    positive so orientation is preserved.
    """
    v = mesh.vertices - mesh.vertices.mean(axis=0)
    cov = v.T @ v / v.shape[0]
    evals, evecs = np.linalg.eigh(cov)  # ascending
    # the eigenvalue most separated from the other two marks the symmetry axis
    if evals[2] - evals[1] >= evals[1] - evals[0]:
        order = [1, 0, 2]  # largest isolated -> prolate-like, its axis to z
    else:
        order = [2, 1, 0]  # smallest isolated -> oblate-like, its axis to z
    R = evecs[:, order]
    if np.linalg.det(R) < 0:
        R = R.copy()
        R[:, 0] = -R[:, 0]
    return mesh.with_vertices(v @ R)


def fit_domain(mesh_or_points, kind_hint=None):
    """Fit a spheroidal domain to a centered, axis-aligned surface.

    Semi-axes come from coordinate extents: a = max cylindrical radius,
    c = half the z extent (full extent for hemispheroids, whose rim is
    expected near the z = 0 plane). Near-spheres fall back to a slightly
    oblate domain with e floored at 5% of a. `kind_hint` may force one of
    the four kinds or the value "hemispheroid" (family chosen from extents);
    open meshes require a hemispheroidal hint.
    """
    pts, mesh = _as_points(mesh_or_points)
    if pts.shape[0] < 4:
        raise ValueError("need at least 4 points to fit a spheroid")
    hemis = None
    if kind_hint is not None:
        if kind_hint == "hemispheroid":
            hemis = True
        elif kind_hint in (OBLATE_HEMISPHEROID, PROLATE_HEMISPHEROID):
            hemis = True
        elif kind_hint in (OBLATE, PROLATE):
            hemis = False
        else:
            raise ValueError(f"unknown kind hint {kind_hint!r}")
    if mesh is not None:
        is_open = not mesh.is_closed
        if is_open and not hemis:
            raise TopologyError(
                "open surface: fitting requires a hemispheroidal kind hint"
            )
        if hemis is None:
            hemis = is_open
    elif hemis is None:
        hemis = False

    a = float(np.hypot(pts[:, 0], pts[:, 1]).max())
    if hemis:
        c = float(pts[:, 2].max() - pts[:, 2].min())
    else:
        c = float((pts[:, 2].max() - pts[:, 2].min()) / 2.0)
    if a <= 0.0 or c <= 0.0:
        raise ValueError("degenerate extents: surface has no volume")

    if kind_hint in (OBLATE, OBLATE_HEMISPHEROID):
        family = "oblate"
    elif kind_hint in (PROLATE, PROLATE_HEMISPHEROID):
        family = "prolate"
    else:
        family = "oblate" if a >= c else "prolate"

    big, small = (a, c) if family == "oblate" else (c, a)
    if (big - small) / big < SPHERE_GAP:
        # sphere-like: floor the focal distance, keep the larger radius exact
        e = SPHERE_FOCAL_FRACTION * big
        zeta0 = float(np.arccosh(big / e))
    else:
        if small >= big:
            raise ValueError(
                f"extents (a={a:.6g}, c={c:.6g}) are inconsistent with a "
                f"{family} domain"
            )
        e = float(np.sqrt(big * big - small * small))
        zeta0 = float(np.arctanh(small / big))
    if family == "oblate":
        kind = OBLATE_HEMISPHEROID if hemis else OBLATE
    else:
        kind = PROLATE_HEMISPHEROID if hemis else PROLATE
    return SpheroidDomain(kind=kind, e=e, zeta0=zeta0)


# ---------------------------------------------------------------------------
# mapping a mesh onto the shell

def _parameter_orientation_sign(domain):
    # d(surface)/d(eta) x d(surface)/d(phi) points inward for the oblate
    # chart and outward for the prolate chart, so outward-oriented faces map
    # to clockwise parameter triangles on oblates.
    return -1.0 if domain.is_oblate_family else 1.0


def map_to_domain(mesh, domain, collapse_tol=1e-8):
    """Hyperbolic projection of mesh vertices onto the shell.

    Every vertex keeps only (eta, phi). Raises FoldError when a non-pole
    parameter triangle reverses orientation (the projection folded) and
    ValueError when two vertices collapse onto the same parameter point.
    """
    coords = pullback(domain, mesh.vertices)
    eta, phi = coords.eta, coords.phi

    # collapse check
    order = np.lexsort((phi, eta))
    de = np.diff(eta[order])
    dp = np.abs(np.diff(phi[order]))
    dp = np.minimum(dp, 2.0 * np.pi - dp)
    if np.any((np.abs(de) < collapse_tol) & (dp < collapse_tol)):
        raise ValueError("two vertices collapse onto the same (eta, phi) point")

    f = mesh.faces
    e1, e2, e3 = eta[f[:, 0]], eta[f[:, 1]], eta[f[:, 2]]
    p1, p2, p3 = phi[f[:, 0]], phi[f[:, 1]], phi[f[:, 2]]
    # unwrap phi within each face so seam-crossing faces get consistent values
    p2 = p2 - 2.0 * np.pi * np.round((p2 - p1) / (2.0 * np.pi))
    p3 = p3 - 2.0 * np.pi * np.round((p3 - p1) / (2.0 * np.pi))
    signed = (e2 - e1) * (p3 - p1) - (e3 - e1) * (p2 - p1)
    # parameter triangles touching a pole are degenerate; skip them
    lo, hi = domain.eta_range
    pole_eta = []
    if domain.kind == OBLATE:
        pole_eta = [lo, hi]
    elif domain.kind == PROLATE:
        pole_eta = [lo, hi]
    elif domain.kind == OBLATE_HEMISPHEROID:
        pole_eta = [hi]
    else:
        pole_eta = [lo]
    at_pole = np.zeros(mesh.n_v, dtype=bool)
    for pe in pole_eta:
        at_pole |= np.abs(eta - pe) < 1e-9
    face_at_pole = at_pole[f].any(axis=1)
    expected = _parameter_orientation_sign(domain)
    folded = (~face_at_pole) & (signed * expected <= 0.0)
    if np.any(folded):
        raise FoldError(
            f"{int(folded.sum())} parameter triangles fold under the projection "
            "(surface not star-shaped about the domain)"
        )
    return coords


# ---------------------------------------------------------------------------
# samplers

def sample_icosphere(domain, refinements):
    """Sample a closed domain: icosphere scaled to the shell's semi-axes,
    pulled back onto the shell. Returns (coords, faces)."""
    if domain.is_hemispheroid:
        raise ValueError("icosphere sampling requires a closed domain")
    base = icosphere(refinements)
    a, c = domain.semi_axes()
    scaled = base.vertices * np.array([a, a, c])
    coords = pullback(domain, scaled)
    return coords, base.faces


def sample_cap_grid(domain, rings, sectors, eps_eta=DEFAULT_EPS_ETA):
    """Sample a hemispheroidal cap on a pole-fan polar grid.

    Ring latitudes are placed so every cell covers (nearly) the same shell
    area: the pole fan holds `sectors` triangles and each ring band holds
    twice that, so ring j sits at cumulative area fraction (2j-1)/(2*rings-1)
    measured from the pole. The rim ring keeps the offset eps_eta from the
    true edge so no sample touches the open boundary. Returns (coords, faces).
    """
    if not domain.is_hemispheroid:
        raise ValueError("cap sampling requires a hemispheroidal domain")
    if rings < 1 or sectors < 3:
        raise ValueError("need rings >= 1 and sectors >= 3")
    if not 0.0 < eps_eta < np.pi / 4.0:
        raise ValueError("eps_eta out of range")
    lo, hi = domain.eta_range
    if domain.kind == PROLATE_HEMISPHEROID:
        pole, rim = lo, hi - eps_eta
    else:
        pole, rim = hi, lo + eps_eta
    # cumulative shell area from the pole, by trapezoid quadrature of the
    # axisymmetric area element  hoop_radius * |d p / d eta|
    eta_fine = np.linspace(pole, rim, 4096)
    pts_fine = forward_coords(domain, eta_fine, np.zeros_like(eta_fine))
    hoop = np.hypot(pts_fine[:, 0], pts_fine[:, 1])
    speed = np.linalg.norm(np.gradient(pts_fine, eta_fine, axis=0), axis=1)
    band = np.concatenate(
        ([0.0], np.cumsum(np.abs(np.diff(eta_fine)) * 0.5 * (
            (hoop * speed)[1:] + (hoop * speed)[:-1]
        )))
    )
    fractions = (2.0 * np.arange(1, rings + 1) - 1.0) / (2.0 * rings - 1.0)
    ring_etas = np.interp(fractions * band[-1], band, eta_fine)
    ring_etas[-1] = rim
    eta = [pole]
    phi = [0.0]
    for j in range(1, rings + 1):
        ring_eta = ring_etas[j - 1]
        for k in range(sectors):
            eta.append(ring_eta)
            phi.append(2.0 * np.pi * k / sectors)
    faces = []
    # pole fan
    for k in range(sectors):
        faces.append((0, 1 + k, 1 + (k + 1) % sectors))
    # quad strips
    for j in range(1, rings):
        inner = 1 + (j - 1) * sectors
        outer = 1 + j * sectors
        for k in range(sectors):
            k2 = (k + 1) % sectors
            faces.append((inner + k, outer + k, outer + k2))
            faces.append((inner + k, outer + k2, inner + k2))
    coords = CurvilinearCoords(
        eta=np.asarray(eta), phi=np.asarray(phi), domain=domain
    )
    faces = np.asarray(faces, dtype=np.int64)
    # fix winding so face normals point outward on the shell
    pts = forward_coords(domain, coords.eta, coords.phi)
    cross = np.cross(
        pts[faces[:, 1]] - pts[faces[:, 0]], pts[faces[:, 2]] - pts[faces[:, 0]]
    )
    outward = surface_normals(domain, coords.eta, coords.phi)[faces[:, 0]]
    if np.median(np.einsum("ij,ij->i", cross, outward)) < 0:
        faces = faces[:, [0, 2, 1]].copy()
    return coords, faces
