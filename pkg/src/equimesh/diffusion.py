"""Remeshing engine: nonlinear diffusion of surface coordinates.

Vertices carry fixed connectivity while their (eta, phi) coordinates flow
toward a uniform area density. Each iteration reconstructs the surface from
its harmonic weights, diffuses the vertex area density one implicit step,
advects vertices up the diffused density gradient, and pulls them back to
the shell. The weights object is never touched: remeshing only re-samples
the same morphology.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EngineError, GuardError
from .harmonics import reconstruct_fast
from .mesh import TriangleMesh, area_density, detect_normal_flips, face_metrics
from .operators import (
    gradient_operator,
    laplacian_aniso,
    laplacian_iso,
    max_diffusion_rate,
    vertex_mass_matrix,
)
from .solver import DT_SCALE, backward_euler_step, estimate_dt
from .spheroidal import (
    DEFAULT_EPS_ETA,
    CurvilinearCoords,
    forward_coords,
    pullback,
    surface_normals,
)

__all__ = [
    "MAX_DT_HALVINGS",
    "DiffusionConfig",
    "DiffusionTrace",
    "BoundaryCondition",
    "apply_boundary_abc",
    "update_coordinates",
    "diffuse_remesh",
    "run_hierarchical",
]

MAX_DT_HALVINGS = 20

# per-step slack on the monotone-STD acceptance test
_STD_SLACK = 1e-9
_EARLY_STOP_WINDOW = 5

CLOSED = "closed"
NEUMANN_AVERAGED_FLUX = "neumann-averaged-flux"


@dataclass(frozen=True)
class DiffusionConfig:
    """Remeshing schedule and physics knobs.

    stages: sequence of (n_max, i_max) pairs with strictly increasing
    degrees — a single pair is the flat schedule. gamma = 0 selects the
    isotropic operator.
    """

    stages: tuple
    gamma: float = 0.0
    dt_scale: float = DT_SCALE
    std_tolerance: float = 1e-6
    eps_eta: float = DEFAULT_EPS_ETA
    alpha_cap: float = 1e4

    def __post_init__(self):
        stages = tuple((int(n), int(i)) for n, i in self.stages)
        object.__setattr__(self, "stages", stages)
        if not stages:
            raise ValueError("stages must be non-empty")
        previous = -1
        for n_max, i_max in stages:
            if n_max <= previous:
                raise ValueError("stage degrees must be strictly increasing")
            if i_max < 1:
                raise ValueError("every stage needs i_max >= 1")
            previous = n_max
        if self.gamma < 0.0:
            raise ValueError("gamma must be nonnegative")
        if self.dt_scale <= 0.0:
            raise ValueError("dt_scale must be positive")
        if self.std_tolerance < 0.0:
            raise ValueError("std_tolerance must be nonnegative")
        if self.eps_eta <= 0.0:
            raise ValueError("eps_eta must be positive")
        if self.alpha_cap < 1.0:
            raise ValueError("alpha_cap must be at least 1")


@dataclass
class DiffusionTrace:
    """Convergence log: one row per accepted iteration.

    basis_evaluation_count is cumulative and includes rejected candidate
    reconstructions, so it is the honest cost meter.
    """

    stage: list = field(default_factory=list)
    t: list = field(default_factory=list)
    dt: list = field(default_factory=list)
    std_u: list = field(default_factory=list)
    mean_u: list = field(default_factory=list)
    flip_count: list = field(default_factory=list)
    boundary_length: list = field(default_factory=list)
    area: list = field(default_factory=list)
    basis_evaluation_count: list = field(default_factory=list)
    initial_std_u: float = float("nan")
    initial_mean_u: float = float("nan")
    initial_area: float = float("nan")
    initial_boundary_length: float = 0.0

    def append(
        self, stage, t, dt, std_u, mean_u, flip_count, boundary_length, area,
        basis_evaluation_count,
    ):
        if self.basis_evaluation_count and (
            basis_evaluation_count < self.basis_evaluation_count[-1]
        ):
            raise ValueError("basis evaluation count must be monotone")
        self.stage.append(int(stage))
        self.t.append(int(t))
        self.dt.append(float(dt))
        self.std_u.append(float(std_u))
        self.mean_u.append(float(mean_u))
        self.flip_count.append(int(flip_count))
        self.boundary_length.append(float(boundary_length))
        self.area.append(float(area))
        self.basis_evaluation_count.append(int(basis_evaluation_count))

    @property
    def n_rows(self):
        return len(self.t)

    def to_csv(self, path):
        header = (
            "stage,t,dt,std_u,mean_u,flip_count,boundary_length,area,"
            "basis_evaluation_count"
        )
        lines = [header]
        for i in range(self.n_rows):
            lines.append(
                f"{self.stage[i]},{self.t[i]},{self.dt[i]:.17g},"
                f"{self.std_u[i]:.17g},{self.mean_u[i]:.17g},"
                f"{self.flip_count[i]},{self.boundary_length[i]:.17g},"
                f"{self.area[i]:.17g},{self.basis_evaluation_count[i]}"
            )
        Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class BoundaryCondition:
    """Averaged-flux data for the shifted boundary of an open surface."""

    kind: str
    boundary_vertices: np.ndarray
    u_bar_prev: float = 0.0
    edge_masses: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in (CLOSED, NEUMANN_AVERAGED_FLUX):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        self.boundary_vertices = np.asarray(self.boundary_vertices, dtype=np.int64)
        if (self.kind == CLOSED) != (self.boundary_vertices.size == 0):
            raise ValueError(
                "closed boundary condition must have an empty vertex set "
                "and open kinds a non-empty one"
            )
        if self.kind == NEUMANN_AVERAGED_FLUX:
            if self.edge_masses is None:
                raise ValueError("open boundary condition needs edge masses")
            self.edge_masses = np.asarray(self.edge_masses, dtype=float)
            if self.edge_masses.shape != self.boundary_vertices.shape:
                raise ValueError("edge masses must match boundary vertices")


def _boundary_edge_masses(mesh, loop):
    """Half-sum of the two adjacent boundary edge lengths per loop vertex."""
    pts = mesh.vertices[loop]
    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    return 0.5 * (seg + np.roll(seg, 1))


def _boundary_length(mesh, loop):
    pts = mesh.vertices[loop]
    return float(np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1).sum())


def apply_boundary_abc(laplacian, vertex_mass, rhs, bc, u_prev, dt):
    """Add the averaged-flux boundary source to the implicit-step RHS.

    Boundary density is steered toward the previous step's mean: each
    boundary vertex receives dt * (u_bar_prev - u_prev) weighted by its
    share of boundary edge length, so a uniform field stays uniform.
    Closed kind returns the RHS unchanged.
    """
    rhs = np.asarray(rhs, dtype=float)
    if bc.kind == CLOSED:
        return rhs
    n = rhs.shape[0]
    if laplacian.shape != (n, n) or vertex_mass.shape != (n, n):
        raise ValueError("system and right-hand side sizes disagree")
    b = bc.boundary_vertices
    if b.size and (b.min() < 0 or b.max() >= n):
        raise ValueError("boundary vertex set inconsistent with the system")
    u_prev = np.asarray(u_prev, dtype=float)
    out = rhs.copy()
    out[b] += dt * (bc.u_bar_prev - u_prev[b]) * bc.edge_masses
    return out


def update_coordinates(coords, vertex_gradient, dt, domain):
    """Advect shell coordinates by the tangential gradient for one step.

    Each vertex is displaced in 3-space by dt times the tangential part of
    its gradient vector, then pulled back to the shell (eta clamped to the
    domain range, phi wrapped).
    """
    g = np.asarray(vertex_gradient, dtype=float)
    if g.shape != (coords.n, 3):
        raise ValueError("vertex gradient must be (n, 3)")
    points = forward_coords(domain, coords.eta, coords.phi)
    normals = surface_normals(domain, coords.eta, coords.phi)
    tangential = g - (g * normals).sum(axis=1, keepdims=True) * normals
    return pullback(domain, points + dt * tangential)


def _average_gradients_to_vertices(faces, areas, face_gradients, n_v):
    """Area-weighted face-to-vertex averaging of gradient vectors."""
    weighted = face_gradients * areas[:, None]
    acc = np.zeros((n_v, 3))
    np.add.at(acc, faces.ravel(), np.repeat(weighted, 3, axis=0))
    total = np.zeros(n_v)
    np.add.at(total, faces.ravel(), np.repeat(areas, 3))
    return acc / total[:, None]


def _with_rim_reset(cand, loop, rim_eta, domain):
    """Pin boundary vertices to the rim curve: they slide in phi only."""
    eta = cand.eta.copy()
    eta[loop] = rim_eta
    return CurvilinearCoords(eta=eta, phi=cand.phi.copy(), domain=domain)


class _StageState:
    """Geometry state carried across iterations of one stage."""

    def __init__(self, coords, mesh_scaled, scale, u, face_normals):
        self.coords = coords
        self.mesh = mesh_scaled
        self.scale = scale
        self.u = u
        self.face_normals = face_normals


def _run_stage(
    weights,
    coords,
    faces,
    config,
    stage_index,
    n_stage,
    i_max,
    trace,
    evals,
    validate_first,
):
    w = weights.truncated(n_stage)
    domain = weights.domain
    n_v = coords.n
    beta_hat = (n_stage + 1) * (n_stage + 2) // 2

    points = reconstruct_fast(w, coords)
    evals += beta_hat * n_v
    mesh0 = TriangleMesh(points, faces, validate=validate_first)
    area0 = mesh0.total_area()
    if not area0 > 0.0:
        raise EngineError("reconstruction has nonpositive area")
    scale = 1.0 / np.sqrt(area0)
    mesh_M = mesh0.with_vertices(points * scale)
    u = area_density(mesh_M)
    _, face_normals, _ = face_metrics(mesh_M)

    loop = mesh_M.boundary_loop()
    is_open = loop is not None
    if is_open:
        loop = np.asarray(loop, dtype=np.int64)
        rim_eta = coords.eta[loop].copy()

    if stage_index == 0:
        trace.initial_std_u = float(u.std())
        trace.initial_mean_u = float(u.mean())
        trace.initial_area = float(area0)
        if is_open:
            trace.initial_boundary_length = _boundary_length(mesh_M, loop) / scale

    mode = "aniso" if config.gamma > 0.0 else "iso"
    alpha = max_diffusion_rate(mesh_M, config.gamma, config.alpha_cap)
    dt_initial = estimate_dt(mesh_M, mode, alpha, c=config.dt_scale)
    dt_allowance = dt_initial
    u_bar_prev = float(u.mean())
    window = deque(maxlen=_EARLY_STOP_WINDOW)

    state = _StageState(coords, mesh_M, scale, u, face_normals)

    for t in range(1, i_max + 1):
        alpha = max_diffusion_rate(state.mesh, config.gamma, config.alpha_cap)
        dt = min(
            dt_allowance,
            estimate_dt(state.mesh, mode, alpha, c=config.dt_scale),
        )
        if config.gamma > 0.0:
            L = laplacian_aniso(state.mesh, config.gamma, config.alpha_cap)
        else:
            L = laplacian_iso(state.mesh)
        M_v = vertex_mass_matrix(state.mesh)
        G = gradient_operator(state.mesh)
        areas, _, _ = face_metrics(state.mesh)

        accepted = False
        flips_seen = 0
        candidate = None
        for _ in range(MAX_DT_HALVINGS + 1):
            rhs_extra = None
            if is_open:
                bc = BoundaryCondition(
                    kind=NEUMANN_AVERAGED_FLUX,
                    boundary_vertices=loop,
                    u_bar_prev=u_bar_prev,
                    edge_masses=_boundary_edge_masses(state.mesh, loop),
                )
                rhs_extra = apply_boundary_abc(
                    L, M_v, np.zeros(n_v), bc, state.u, dt
                )
            u_diffused = backward_euler_step(
                M_v, L, state.u, dt, rhs_extra=rhs_extra, tolerance=1e-12
            )
            face_grad = np.asarray(G @ u_diffused).reshape(-1, 3)
            vertex_grad = _average_gradients_to_vertices(
                faces, areas, face_grad, n_v
            )
            velocity = vertex_grad / np.maximum(u_diffused, 1e-15)[:, None]
            cand_coords = update_coordinates(state.coords, velocity, dt, domain)
            if is_open:
                cand_coords = _with_rim_reset(cand_coords, loop, rim_eta, domain)
            cand_points = reconstruct_fast(w, cand_coords)
            evals += beta_hat * n_v
            cand_mesh = state.mesh.with_vertices(cand_points * scale)
            flips = detect_normal_flips(cand_mesh, state.face_normals)
            cand_u = area_density(cand_mesh)
            if flips.size == 0 and cand_u.std() <= state.u.std() * (
                1.0 + _STD_SLACK
            ):
                candidate = (cand_coords, cand_mesh, cand_u)
                accepted = True
                break
            flips_seen += int(flips.size)
            dt *= 0.5
            dt_allowance = dt

        if not accepted:
            if flips_seen:
                raise EngineError(
                    f"flip recovery exhausted after {MAX_DT_HALVINGS} time-step "
                    f"halvings (stage {stage_index}, iteration {t})"
                )
            # density spread cannot shrink further: the stage has converged
            break

        cand_coords, cand_mesh, cand_u = candidate
        u_bar_prev = float(state.u.mean())
        state.coords = cand_coords
        state.mesh = cand_mesh
        state.u = cand_u
        _, state.face_normals, _ = face_metrics(cand_mesh)
        dt_allowance = min(dt_allowance * 2.0, dt_initial)

        std_now = float(cand_u.std())
        blen = _boundary_length(cand_mesh, loop) / scale if is_open else 0.0
        trace.append(
            stage=stage_index,
            t=t,
            dt=dt,
            std_u=std_now,
            mean_u=float(cand_u.mean()),
            flip_count=flips_seen,
            boundary_length=blen,
            area=float(cand_mesh.total_area()) / (scale * scale),
            basis_evaluation_count=evals,
        )
        window.append(std_now)
        if (
            len(window) == _EARLY_STOP_WINDOW
            and window[0] - window[-1] < config.std_tolerance
        ):
            break

    return state, evals


def diffuse_remesh(weights, initial_coords, faces, config):
    """Equalize the sampling of a harmonic surface; returns
    (final_coords, remeshed_mesh, trace).

    Runs the configured stages in order, carrying coordinates forward.
    Connectivity is fixed throughout; the weights object is never modified.
    The returned mesh is the reconstruction at the final coordinates at its
    natural (original) surface area.
    """
    for n_stage, _ in config.stages:
        if n_stage > weights.n_max:
            raise GuardError(
                f"stage degree {n_stage} exceeds weight degree {weights.n_max}"
            )
    faces = np.ascontiguousarray(faces, dtype=np.int64)
    trace = DiffusionTrace()
    coords = initial_coords
    evals = 0
    state = None
    try:
        for k, (n_stage, i_max) in enumerate(config.stages):
            state, evals = _run_stage(
                weights,
                coords,
                faces,
                config,
                stage_index=k,
                n_stage=n_stage,
                i_max=i_max,
                trace=trace,
                evals=evals,
                validate_first=(k == 0),
            )
            coords = state.coords
    except EngineError as exc:
        exc.trace = trace
        raise
    final_mesh = TriangleMesh(
        state.mesh.vertices / state.scale, faces, validate=True
    )
    return coords, final_mesh, trace


def run_hierarchical(weights, initial_coords, faces, config):
    """Staged remeshing: ascending degrees, decreasing iteration budgets.

    Identical to diffuse_remesh — the staged schedule lives in the config —
    but spelled separately for call sites that always pass multiple stages.
    """
    return diffuse_remesh(weights, initial_coords, faces, config)
