"""Triangle meshes and planar contours: containers, file IO, quality measures."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .errors import FormatError, GuardError, TopologyError

__all__ = [
    "TriangleMesh",
    "Contour2D",
    "QualityReport",
    "load_mesh",
    "save_mesh",
    "icosphere",
    "face_metrics",
    "vertex_voronoi_areas",
    "area_density",
    "detect_normal_flips",
    "compare_surfaces",
    "quality_report",
]

_UNSET = object()

# ρ̂ sentinel reported for zero-area faces, one past the open upper bound of
# the valid range [1, 2).
DEGENERATE_RHO_HAT = 2.0

MAX_ICOSPHERE_REFINEMENTS = 8


class TriangleMesh:
    """Immutable oriented triangle mesh.

    Parameters
    ----------
    vertices : (n_v, 3) float array
    faces : (n_f, 3) int array
        Consistently oriented (counter-clockwise seen from outside).
    validate : bool
        Run the structural checks. Internal callers that reuse a known
        connectivity may skip them.

    Raises
    ------
    ValueError
        Malformed arrays, out-of-range indices, or degenerate faces.
    TopologyError
        Non-manifold edges, inconsistent orientation, or more than one
        boundary loop.
    """

    def __init__(self, vertices, faces, validate=True):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValueError("vertices must be an (n_v, 3) array")
        if f.ndim != 2 or f.shape[1] != 3:
            raise ValueError("faces must be an (n_f, 3) array")
        v.setflags(write=False)
        f.setflags(write=False)
        self.vertices = v
        self.faces = f
        self._boundary_loop = _UNSET
        self._unique_edges = None
        if validate:
            self._validate()

    @property
    def n_v(self):
        return self.vertices.shape[0]

    @property
    def n_f(self):
        return self.faces.shape[0]

    def directed_edges(self):
        f = self.faces
        return np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])

    def _validate(self):
        f = self.faces
        if self.n_f == 0:
            self._boundary_loop = None
            return
        if f.min() < 0 or f.max() >= self.n_v:
            raise ValueError("face index out of range")
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])):
            raise ValueError("degenerate face (repeated vertex index)")
        edges = self.directed_edges()
        n = self.n_v
        directed_key = edges[:, 0] * n + edges[:, 1]
        if np.unique(directed_key).size != directed_key.size:
            raise TopologyError(
                "non-manifold or inconsistently oriented edge "
                "(directed edge used twice)"
            )
        lo = np.minimum(edges[:, 0], edges[:, 1])
        hi = np.maximum(edges[:, 0], edges[:, 1])
        ukey = lo * n + hi
        _, inverse, counts = np.unique(ukey, return_inverse=True, return_counts=True)
        if counts.max() > 2:
            raise TopologyError("non-manifold edge (shared by more than two faces)")
        boundary_mask = counts[inverse] == 1
        loops = _chain_loops(edges[boundary_mask])
        if len(loops) > 1:
            raise TopologyError(f"{len(loops)} boundary loops (at most one supported)")
        self._boundary_loop = loops[0] if loops else None

    def boundary_loop(self):
        """Ordered vertex indices of the boundary, or None when closed."""
        if self._boundary_loop is _UNSET:
            edges = self.directed_edges()
            n = self.n_v
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            _, inverse, counts = np.unique(
                lo * n + hi, return_inverse=True, return_counts=True
            )
            loops = _chain_loops(edges[counts[inverse] == 1])
            if len(loops) > 1:
                raise TopologyError(f"{len(loops)} boundary loops")
            self._boundary_loop = loops[0] if loops else None
        return self._boundary_loop

    @property
    def is_closed(self):
        return self.boundary_loop() is None

    def unique_edges(self):
        if self._unique_edges is None:
            e = self.directed_edges()
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            self._unique_edges = np.unique(np.column_stack([lo, hi]), axis=0)
            self._unique_edges.setflags(write=False)
        return self._unique_edges

    def mean_edge_length(self):
        e = self.unique_edges()
        d = self.vertices[e[:, 0]] - self.vertices[e[:, 1]]
        return float(np.mean(np.linalg.norm(d, axis=1)))

    def total_area(self):
        areas, _, _ = face_metrics(self)
        return float(areas.sum())

    def euler_characteristic(self):
        return self.n_v - self.unique_edges().shape[0] + self.n_f

    def with_vertices(self, vertices):
        """Same connectivity, new vertex positions; structural caches carry over."""
        m = TriangleMesh(vertices, self.faces, validate=False)
        m._boundary_loop = self._boundary_loop
        m._unique_edges = self._unique_edges
        return m


def _chain_loops(boundary_edges):
    """Chain directed boundary edges into ordered loops."""
    if boundary_edges.shape[0] == 0:
        return []
    succ = {}
    for a, b in boundary_edges:
        a = int(a)
        if a in succ:
            raise TopologyError("non-manifold boundary vertex")
        succ[a] = int(b)
    loops = []
    remaining = dict(succ)
    while remaining:
        start = next(iter(remaining))
        loop = [start]
        cur = remaining.pop(start)
        while cur != start:
            loop.append(cur)
            if cur not in remaining:
                raise TopologyError("open boundary chain (non-manifold boundary)")
            cur = remaining.pop(cur)
        loops.append(np.asarray(loop, dtype=np.int64))
    return loops


@dataclass
class Contour2D:
    """Closed or open planar polyline.

    points : (n, 2) float array, consecutive points distinct (cyclically for
    closed contours); closed contours need at least 3 points and do not
    repeat the first point at the end.
    """

    points: np.ndarray
    closed: bool = True

    def __post_init__(self):
        p = np.ascontiguousarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError("points must be an (n, 2) array")
        if self.closed and p.shape[0] < 3:
            raise ValueError("closed contour needs at least 3 points")
        if p.shape[0] >= 2:
            d = np.linalg.norm(np.diff(p, axis=0), axis=1)
            if np.any(d == 0.0):
                raise ValueError("repeated consecutive point")
            if self.closed and np.linalg.norm(p[0] - p[-1]) == 0.0:
                raise ValueError("closed contour must not repeat its first point")
        self.points = p

    @property
    def n_points(self):
        return self.points.shape[0]

    def segment_lengths(self):
        p = self.points
        if self.closed:
            return np.linalg.norm(np.roll(p, -1, axis=0) - p, axis=1)
        return np.linalg.norm(np.diff(p, axis=0), axis=1)

    def length(self):
        return float(self.segment_lengths().sum())


# ---------------------------------------------------------------------------
# file IO

_EXT_TO_FORMAT = {".obj": "obj", ".off": "off", ".ply": "ply"}


def _resolve_format(path, fmt):
    if fmt is None:
        fmt = _EXT_TO_FORMAT.get(Path(path).suffix.lower())
        if fmt is None:
            raise FormatError(f"cannot infer mesh format from {path!r}")
    fmt = fmt.lower()
    if fmt not in ("obj", "off", "ply"):
        raise FormatError(f"unsupported mesh format {fmt!r}")
    return fmt


def load_mesh(path, fmt=None):
    """Read an OBJ, OFF, or ascii-PLY triangle mesh.

    Polygonal faces are fan-triangulated. Parse problems raise FormatError;
    connectivity problems raise TopologyError.
    """
    fmt = _resolve_format(path, fmt)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    if fmt == "obj":
        vertices, polygons = _parse_obj(text)
    elif fmt == "off":
        vertices, polygons = _parse_off(text)
    else:
        vertices, polygons = _parse_ply(text)
    if not vertices:
        raise FormatError("mesh file contains no vertices")
    faces = []
    for poly in polygons:
        if len(poly) < 3:
            raise FormatError("face with fewer than 3 vertices")
        for k in range(1, len(poly) - 1):
            faces.append((poly[0], poly[k], poly[k + 1]))
    if not faces:
        raise FormatError("mesh file contains no faces")
    return TriangleMesh(np.asarray(vertices, dtype=float), np.asarray(faces))


def _parse_obj(text):
    vertices, polygons = [], []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise FormatError(f"line {ln}: vertex needs 3 coordinates")
            try:
                vertices.append(tuple(float(x) for x in parts[1:4]))
            except ValueError as exc:
                raise FormatError(f"line {ln}: bad vertex coordinate") from exc
        elif parts[0] == "f":
            poly = []
            for ref in parts[1:]:
                token = ref.split("/", 1)[0]
                try:
                    idx = int(token)
                except ValueError as exc:
                    raise FormatError(f"line {ln}: bad face index {ref!r}") from exc
                if idx < 1:
                    raise FormatError(
                        f"line {ln}: face index {idx} out of range (1-based)"
                    )
                poly.append(idx - 1)
            polygons.append(poly)
    return vertices, polygons


def _significant_lines(text):
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            yield line


def _parse_off(text):
    lines = _significant_lines(text)
    try:
        header = next(lines)
    except StopIteration:
        raise FormatError("empty OFF file") from None
    counts_line = None
    if header.upper().startswith("OFF"):
        rest = header[3:].strip()
        if rest:
            counts_line = rest
    else:
        counts_line = header  # headerless variant
    if counts_line is None:
        try:
            counts_line = next(lines)
        except StopIteration:
            raise FormatError("OFF file missing counts line") from None
    try:
        n_v, n_f = (int(x) for x in counts_line.split()[:2])
    except ValueError as exc:
        raise FormatError("bad OFF counts line") from exc
    vertices, polygons = [], []
    try:
        for _ in range(n_v):
            parts = next(lines).split()
            vertices.append(tuple(float(x) for x in parts[:3]))
        for _ in range(n_f):
            parts = next(lines).split()
            k = int(parts[0])
            if len(parts) < 1 + k:
                raise FormatError("OFF face row shorter than its count")
            poly = [int(x) for x in parts[1 : 1 + k]]
            if min(poly) < 0:
                raise FormatError("negative OFF face index")
            polygons.append(poly)
    except StopIteration:
        raise FormatError("truncated OFF file") from None
    except ValueError as exc:
        raise FormatError(f"bad OFF value: {exc}") from exc
    return vertices, polygons


def _parse_ply(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise FormatError("not a PLY file")
    elements = []  # (name, count, properties)
    i = 1
    fmt_seen = False
    while i < len(lines):
        parts = lines[i].strip().split()
        i += 1
        if not parts or parts[0] == "comment":
            continue
        if parts[0] == "format":
            if len(parts) < 2 or parts[1] != "ascii":
                raise FormatError("only ascii PLY is supported")
            fmt_seen = True
        elif parts[0] == "element":
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise FormatError("PLY property before any element")
            elements[-1][2].append(parts[1:])
        elif parts[0] == "end_header":
            break
    else:
        raise FormatError("PLY header missing end_header")
    if not fmt_seen:
        raise FormatError("PLY header missing format line")
    vertices, polygons = [], []
    for name, count, props in elements:
        if name == "vertex":
            scalar_names = [p[-1] for p in props if p[0] != "list"]
            try:
                ix, iy, iz = (scalar_names.index(c) for c in ("x", "y", "z"))
            except ValueError:
                raise FormatError("PLY vertex element lacks x/y/z") from None
            for _ in range(count):
                if i >= len(lines):
                    raise FormatError("truncated PLY vertex data")
                parts = lines[i].split()
                i += 1
                try:
                    vertices.append(
                        (float(parts[ix]), float(parts[iy]), float(parts[iz]))
                    )
                except (ValueError, IndexError) as exc:
                    raise FormatError("bad PLY vertex row") from exc
        elif name == "face":
            for _ in range(count):
                if i >= len(lines):
                    raise FormatError("truncated PLY face data")
                parts = lines[i].split()
                i += 1
                try:
                    k = int(parts[0])
                    poly = [int(x) for x in parts[1 : 1 + k]]
                except (ValueError, IndexError) as exc:
                    raise FormatError("bad PLY face row") from exc
                if len(poly) != k or (poly and min(poly) < 0):
                    raise FormatError("bad PLY face row")
                polygons.append(poly)
        else:
            for _ in range(count):  # skip unknown element payload
                i += 1
    return vertices, polygons


def save_mesh(mesh, path, fmt=None):
    """Write a mesh; floats carry 17 significant digits so loads round-trip."""
    fmt = _resolve_format(path, fmt)
    v, f = mesh.vertices, mesh.faces
    out = []
    if fmt == "obj":
        for p in v:
            out.append(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
        for a, b, c in f + 1:
            out.append(f"f {a} {b} {c}")
    elif fmt == "off":
        out.append("OFF")
        out.append(f"{mesh.n_v} {mesh.n_f} 0")
        for p in v:
            out.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
        for a, b, c in f:
            out.append(f"3 {a} {b} {c}")
    else:
        out.extend(
            [
                "ply",
                "format ascii 1.0",
                f"element vertex {mesh.n_v}",
                "property double x",
                "property double y",
                "property double z",
                f"element face {mesh.n_f}",
                "property list uchar int vertex_indices",
                "end_header",
            ]
        )
        for p in v:
            out.append(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}")
        for a, b, c in f:
            out.append(f"3 {a} {b} {c}")
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------------------
# icosphere

def icosphere(refinements):
    """Unit icosphere: icosahedron subdivided `refinements` times.

    Vertex/face counts are 10*4^r + 2 and 20*4^r.
    """
    if not 0 <= int(refinements) <= MAX_ICOSPHERE_REFINEMENTS:
        raise GuardError(
            f"refinements must be in [0, {MAX_ICOSPHERE_REFINEMENTS}], "
            f"got {refinements}"
        )
    t = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=float,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(int(refinements)):
        verts_list = list(verts)
        cache = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            idx = cache.get(key)
            if idx is None:
                p = verts_list[a] + verts_list[b]
                p = p / np.linalg.norm(p)
                idx = len(verts_list)
                verts_list.append(p)
                cache[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        verts = np.asarray(verts_list)
        faces = np.asarray(new_faces, dtype=np.int64)
    # enforce outward orientation regardless of the seed table's handedness
    centroids = verts[faces].mean(axis=1)
    normals = np.cross(verts[faces[:, 1]] - verts[faces[:, 0]],
                       verts[faces[:, 2]] - verts[faces[:, 0]])
    inward = np.einsum("ij,ij->i", normals, centroids) < 0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return TriangleMesh(verts, faces)


# ---------------------------------------------------------------------------
# per-face and per-vertex measures

def face_metrics(mesh):
    """Per-face areas, unit normals, and normalized circumradius.

    The normalized circumradius rho_hat = circumradius * sqrt(3) / mean side
    is 1 for equilateral triangles and approaches 2 as a triangle collapses;
    zero-area faces get the sentinel value 2 and a zero normal.

    Returns
    -------
    areas : (n_f,) float
    normals : (n_f, 3) float
    rho_hat : (n_f,) float
    """
    v = mesh.vertices
    f = mesh.faces
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    cross = np.cross(p1 - p0, p2 - p0)
    double_area = np.linalg.norm(cross, axis=1)
    areas = 0.5 * double_area
    a = np.linalg.norm(p2 - p1, axis=1)
    b = np.linalg.norm(p0 - p2, axis=1)
    c = np.linalg.norm(p1 - p0, axis=1)
    ok = double_area > 0.0
    normals = np.zeros_like(cross)
    normals[ok] = cross[ok] / double_area[ok, None]
    rho_hat = np.full(f.shape[0], DEGENERATE_RHO_HAT)
    a_avg = (a + b + c) / 3.0
    with np.errstate(divide="ignore", invalid="ignore"):
        circum = a * b * c / (4.0 * areas)
        rho_hat[ok] = circum[ok] * np.sqrt(3.0) / a_avg[ok]
    return areas, normals, rho_hat


def vertex_voronoi_areas(mesh):
    """Per-vertex area mass under the mixed Voronoi rule.

    Non-obtuse triangles are split by the true Voronoi (circumcentric) cells;
    obtuse triangles give half their area to the obtuse corner and a quarter
    to each other corner, which keeps every contribution positive. The masses
    always sum to the total surface area.
    """
    v = mesh.vertices
    f = mesh.faces
    p = v[f]  # (n_f, 3, 3)
    # edge vectors opposite each corner and squared lengths
    e0 = p[:, 2] - p[:, 1]
    e1 = p[:, 0] - p[:, 2]
    e2 = p[:, 1] - p[:, 0]
    l0 = np.einsum("ij,ij->i", e0, e0)
    l1 = np.einsum("ij,ij->i", e1, e1)
    l2 = np.einsum("ij,ij->i", e2, e2)
    cross = np.cross(e2, -e1)
    double_area = np.linalg.norm(cross, axis=1)
    area = 0.5 * double_area
    # cotangents at each corner via dot / |cross|
    with np.errstate(divide="ignore", invalid="ignore"):
        cot0 = np.einsum("ij,ij->i", e2, -e1) / double_area
        cot1 = np.einsum("ij,ij->i", e0, -e2) / double_area
        cot2 = np.einsum("ij,ij->i", e1, -e0) / double_area
    cot = np.nan_to_num(np.column_stack([cot0, cot1, cot2]))
    obtuse_corner = np.argmin(cot, axis=1)
    is_obtuse = cot[np.arange(len(cot)), obtuse_corner] < 0.0

    contrib = np.empty((f.shape[0], 3))
    # Voronoi split: corner i gets (|e_j|^2 cot_j + |e_k|^2 cot_k) / 8
    contrib[:, 0] = (l1 * cot1 + l2 * cot2) / 8.0
    contrib[:, 1] = (l2 * cot2 + l0 * cot0) / 8.0
    contrib[:, 2] = (l0 * cot0 + l1 * cot1) / 8.0
    if np.any(is_obtuse):
        quarter = 0.25 * area[is_obtuse]
        rows = np.repeat(quarter[:, None], 3, axis=1)
        rows[np.arange(rows.shape[0]), obtuse_corner[is_obtuse]] = 2.0 * quarter
        contrib[is_obtuse] = rows
    masses = np.zeros(mesh.n_v)
    np.add.at(masses, f, contrib)
    return masses


def area_density(mesh):
    """Normalized per-vertex area density u = A_i / sum(A); sums to 1."""
    masses = vertex_voronoi_areas(mesh)
    total = masses.sum()
    if total <= 0.0:
        raise ValueError("mesh has no area")
    return masses / total


def detect_normal_flips(mesh, reference_normals):
    """Indices of faces whose normal reversed against a reference set."""
    ref = np.asarray(reference_normals, dtype=float)
    if ref.shape != (mesh.n_f, 3):
        raise ValueError(
            f"reference normals shape {ref.shape} does not match {mesh.n_f} faces"
        )
    _, normals, _ = face_metrics(mesh)
    return np.nonzero(np.einsum("ij,ij->i", normals, ref) < 0.0)[0]


# ---------------------------------------------------------------------------
# surface-to-surface distance

def _point_triangle_distance(point, tri):
    """Distances from one point to each triangle in tri ((k,3,3) array)."""
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab = b - a
    ac = c - a
    ap = point - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = point - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = point - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    closest = np.empty_like(tri[:, 0])
    # vertex regions
    reg_a = (d1 <= 0) & (d2 <= 0)
    reg_b = (d3 >= 0) & (d4 <= d3)
    reg_c = (d6 >= 0) & (d5 <= d6)
    # edge regions
    with np.errstate(divide="ignore", invalid="ignore"):
        v_ab = np.where(d1 - d3 != 0, d1 / (d1 - d3), 0.0)
        w_ac = np.where(d2 - d6 != 0, d2 / (d2 - d6), 0.0)
        denom_bc = (d4 - d3) + (d5 - d6)
        w_bc = np.where(denom_bc != 0, (d4 - d3) / denom_bc, 0.0)
    reg_ab = (~reg_a) & (~reg_b) & (~reg_c) & (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    reg_ac = (~reg_a) & (~reg_b) & (~reg_c) & (~reg_ab) & (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    reg_bc = (
        (~reg_a) & (~reg_b) & (~reg_c) & (~reg_ab) & (~reg_ac)
        & (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    )
    interior = ~(reg_a | reg_b | reg_c | reg_ab | reg_ac | reg_bc)

    closest[reg_a] = a[reg_a]
    closest[reg_b] = b[reg_b]
    closest[reg_c] = c[reg_c]
    closest[reg_ab] = a[reg_ab] + v_ab[reg_ab, None] * ab[reg_ab]
    closest[reg_ac] = a[reg_ac] + w_ac[reg_ac, None] * ac[reg_ac]
    closest[reg_bc] = b[reg_bc] + w_bc[reg_bc, None] * (c[reg_bc] - b[reg_bc])
    if np.any(interior):
        denom = va + vb + vc
        with np.errstate(divide="ignore", invalid="ignore"):
            v_bar = np.where(denom != 0, vb / denom, 1.0 / 3.0)
            w_bar = np.where(denom != 0, vc / denom, 1.0 / 3.0)
        closest[interior] = (
            a[interior]
            + v_bar[interior, None] * ab[interior]
            + w_bar[interior, None] * ac[interior]
        )
    return np.linalg.norm(point - closest, axis=1)


def _mean_distance_to_surface(points, target):
    tri = target.vertices[target.faces]
    centroids = tri.mean(axis=1)
    spread = np.max(np.linalg.norm(tri - centroids[:, None, :], axis=2), axis=1)
    r_max = float(spread.max())
    tree = cKDTree(centroids)
    d_centroid, nearest = tree.query(points)
    dists = np.empty(points.shape[0])
    for i, point in enumerate(points):
        # exact distance to the nearest-centroid face bounds the search radius
        upper = _point_triangle_distance(point, tri[nearest[i]][None, :, :])[0]
        candidates = tree.query_ball_point(point, upper + r_max + 1e-12)
        dists[i] = _point_triangle_distance(point, tri[candidates]).min()
    return float(dists.mean())


def compare_surfaces(mesh_a, mesh_b):
    """Symmetric mean vertex-to-surface distance plus both total areas.

    Returns
    -------
    mean_distance : float
        Average of (mean distance from A's vertices to surface B) and the
        reverse direction.
    area_a, area_b : float
    """
    d_ab = _mean_distance_to_surface(mesh_a.vertices, mesh_b)
    d_ba = _mean_distance_to_surface(mesh_b.vertices, mesh_a)
    return 0.5 * (d_ab + d_ba), mesh_a.total_area(), mesh_b.total_area()


# ---------------------------------------------------------------------------
# quality report

@dataclass
class QualityReport:
    """Per-face and per-vertex quality measures with summary statistics."""

    face_areas: np.ndarray
    rho_hat: np.ndarray
    area_density: np.ndarray
    mean_u: float
    std_u: float
    mean_rho_hat: float
    hist_u: tuple  # (bin_edges, counts)
    hist_rho_hat: tuple

    def to_csv(self, path):
        """One row per face (area, rho_hat) and per vertex (area_density)."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["kind", "index", "area", "rho_hat", "area_density"])
            for i, (area, rho) in enumerate(zip(self.face_areas, self.rho_hat)):
                writer.writerow(["face", i, f"{area:.17g}", f"{rho:.17g}", ""])
            for i, u in enumerate(self.area_density):
                writer.writerow(["vertex", i, "", "", f"{u:.17g}"])

    def summary_lines(self):
        lines = [
            f"vertices {self.area_density.shape[0]} faces {self.face_areas.shape[0]}",
            f"mean area density {self.mean_u:.6e}",
            f"std area density  {self.std_u:.6e}",
            f"mean rho_hat      {self.mean_rho_hat:.6f}",
            "rho_hat histogram:",
        ]
        edges, counts = self.hist_rho_hat
        for lo, hi, n in zip(edges[:-1], edges[1:], counts):
            lines.append(f"  [{lo:.3f}, {hi:.3f}): {n}")
        return lines


def quality_report(mesh, bins=16):
    areas, _, rho_hat = face_metrics(mesh)
    u = area_density(mesh)
    hist_u = np.histogram(u, bins=bins)
    hist_rho = np.histogram(rho_hat, bins=bins, range=(1.0, 2.0))
    return QualityReport(
        face_areas=areas,
        rho_hat=rho_hat,
        area_density=u,
        mean_u=float(u.mean()),
        std_u=float(u.std()),
        mean_rho_hat=float(rho_hat.mean()),
        hist_u=(hist_u[1], hist_u[0]),
        hist_rho_hat=(hist_rho[1], hist_rho[0]),
    )
