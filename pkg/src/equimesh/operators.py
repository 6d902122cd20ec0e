"""Discrete differential operators on the evolving manifold mesh.

Gradient, lumped masses, and the isotropic / anisotropic Laplace-Beltrami
operators assembled in weak form: L = -G^T A G, with an optional per-face
diffusion tensor D slotted between the gradients. All operators act on
per-vertex scalars; face quantities are stacked Cartesian 3-vectors.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .mesh import face_metrics, vertex_voronoi_areas

__all__ = [
    "ALPHA_CAP",
    "ALPHA_MIN",
    "COLLAPSE_RATIO",
    "gradient_operator",
    "face_mass_matrix",
    "vertex_mass_matrix",
    "laplacian_iso",
    "face_directors",
    "rodrigues_quarter_turn",
    "diffusion_tensors",
    "laplacian_aniso",
    "max_diffusion_rate",
    "dump_operator",
]

ALPHA_CAP = 1e4
ALPHA_MIN = 1.0 / ALPHA_CAP
COLLAPSE_RATIO = 1e-8


def gradient_operator(mesh):
    """Sparse (3*n_f, n_v) map from vertex scalars to per-face gradients.

    Rows 3f..3f+2 hold the Cartesian gradient of the piecewise-linear
    interpolant on face f. Constant fields map to zero by construction.
    """
    areas, normals, _ = face_metrics(mesh)
    if np.any(areas <= 0.0):
        raise ValueError("degenerate face in gradient operator")
    tri = mesh.vertices[mesh.faces]  # (n_f, 3, 3)
    # edge opposite each corner, CCW: e_k = p_{k+2} - p_{k+1}
    edges = tri[:, [2, 0, 1], :] - tri[:, [1, 2, 0], :]
    grads = np.cross(normals[:, None, :], edges) / (2.0 * areas[:, None, None])

    n_f = mesh.n_f
    rows = (3 * np.arange(n_f)[:, None, None] + np.arange(3)[None, None, :])
    rows = np.broadcast_to(rows, (n_f, 3, 3)).ravel()
    cols = np.broadcast_to(mesh.faces[:, :, None], (n_f, 3, 3)).ravel()
    vals = grads.transpose(0, 1, 2).ravel()
    G = sp.coo_matrix(
        (vals, (rows, cols)), shape=(3 * n_f, mesh.n_v)
    ).tocsr()
    return G


def face_mass_matrix(mesh):
    """Diagonal (3*n_f, 3*n_f): each face area repeated per component."""
    areas, _, _ = face_metrics(mesh)
    if np.any(areas <= 0.0):
        raise ValueError("degenerate face in mass matrix")
    return sp.diags(np.repeat(areas, 3), format="csr")


def vertex_mass_matrix(mesh):
    """Diagonal (n_v, n_v) of Voronoi vertex areas; trace = total area."""
    return sp.diags(vertex_voronoi_areas(mesh), format="csr")


def laplacian_iso(mesh):
    """Weak-form Laplace-Beltrami: L = -G^T A G.

    Symmetric with zero row sums; -L is positive semidefinite. Entrywise
    this is the half-cotangent-weight matrix.
    """
    G = gradient_operator(mesh)
    A = face_mass_matrix(mesh)
    L = -(G.T @ (A @ G))
    L = (L + L.T) * 0.5  # kill assembly roundoff asymmetry
    return L.tocsr()


def _batched_directors(tri, gamma, alpha_cap):
    """Per-face frames and diffusion rates for stacked (n_f, 3, 3) vertices."""
    centered = tri - tri.mean(axis=1, keepdims=True)
    # right singular vectors span {stretch, secondary, normal}
    _, sigma, vt = np.linalg.svd(centered)
    lam1 = sigma[:, 0]
    lam2 = sigma[:, 1]
    if np.any(lam1 <= 0.0) or np.any(lam2 / np.maximum(lam1, 1e-300) < COLLAPSE_RATIO):
        raise ValueError("collapsed face in director computation")
    v1 = vt[:, 0, :]
    # geometric normal fixes the sign ambiguity of the SVD frame
    normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    v2 = np.cross(normal, v1)

    ratio = lam1 / lam2
    log_cap = np.log(alpha_cap)
    alpha1 = np.exp(np.maximum((1.0 - ratio) / gamma, -log_cap))
    alpha2 = np.exp(np.minimum((1.0 - 1.0 / ratio) * gamma, log_cap))
    return v1, v2, normal, lam1, lam2, alpha1, alpha2


def face_directors(face_vertices, gamma, alpha_cap=ALPHA_CAP):
    """Principal stretch frame and diffusion rates of a single face.

    Returns (v1, v2, normal, lambda1, lambda2, alpha1, alpha2). The face
    vertices are centered on their centroid before the singular value
    decomposition, so the two nonzero singular values measure in-plane
    stretch only. alpha1 = exp((1 - lambda1/lambda2)/gamma) damps diffusion
    along the stretch direction; alpha2 = exp((1 - lambda2/lambda1)*gamma)
    amplifies it across, with the exponent capped at ln(alpha_cap).
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    tri = np.asarray(face_vertices, dtype=float).reshape(1, 3, 3)
    v1, v2, n, l1, l2, a1, a2 = _batched_directors(tri, gamma, alpha_cap)
    return (
        v1[0],
        v2[0],
        n[0],
        float(l1[0]),
        float(l2[0]),
        float(a1[0]),
        float(a2[0]),
    )


def rodrigues_quarter_turn(normal):
    """Rotation by +pi/2 about the unit normal: R = I + N + N^2."""
    n = np.asarray(normal, dtype=float)
    if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("normal must be a unit 3-vector")
    skew = np.array(
        [
            [0.0, -n[2], n[1]],
            [n[2], 0.0, -n[0]],
            [-n[1], n[0], 0.0],
        ]
    )
    return np.eye(3) + skew + skew @ skew


def _batched_quarter_turn(normals):
    n_f = normals.shape[0]
    skew = np.zeros((n_f, 3, 3))
    skew[:, 0, 1] = -normals[:, 2]
    skew[:, 0, 2] = normals[:, 1]
    skew[:, 1, 0] = normals[:, 2]
    skew[:, 1, 2] = -normals[:, 0]
    skew[:, 2, 0] = -normals[:, 1]
    skew[:, 2, 1] = normals[:, 0]
    return np.eye(3)[None] + skew + skew @ skew


def diffusion_tensors(mesh, gamma, alpha_cap=ALPHA_CAP):
    """Per-face 3x3 SPD diffusion tensors (n_f, 3, 3).

    Directors are rotated a quarter turn about the face normal, then
    D = alpha1 v1p v1p^T + alpha2 v2p v2p^T + n n^T: anisotropy acts in the
    tangent plane, the normal component passes through unchanged.
    """
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    tri = mesh.vertices[mesh.faces]
    v1, v2, n, _, _, a1, a2 = _batched_directors(tri, gamma, alpha_cap)
    R = _batched_quarter_turn(n)
    v1p = np.einsum("fij,fj->fi", R, v1)
    v2p = np.einsum("fij,fj->fi", R, v2)
    D = (
        a1[:, None, None] * v1p[:, :, None] * v1p[:, None, :]
        + a2[:, None, None] * v2p[:, :, None] * v2p[:, None, :]
        + n[:, :, None] * n[:, None, :]
    )
    return D


def laplacian_aniso(mesh, gamma, alpha_cap=ALPHA_CAP):
    """Anisotropic weak-form operator L = -G^T D A G.

    gamma = 0 is the isotropic operator (all rates clamp to 1, D = I).
    """
    if gamma < 0.0:
        raise ValueError("gamma must be nonnegative")
    if gamma == 0.0:
        return laplacian_iso(mesh)
    D = diffusion_tensors(mesh, gamma, alpha_cap)
    n_f = mesh.n_f
    block = np.arange(n_f) * 3
    rows = (block[:, None, None] + np.arange(3)[None, :, None])
    rows = np.broadcast_to(rows, (n_f, 3, 3)).ravel()
    cols = (block[:, None, None] + np.arange(3)[None, None, :])
    cols = np.broadcast_to(cols, (n_f, 3, 3)).ravel()
    D_block = sp.coo_matrix(
        (D.ravel(), (rows, cols)), shape=(3 * n_f, 3 * n_f)
    ).tocsr()
    G = gradient_operator(mesh)
    A = face_mass_matrix(mesh)
    L = -(G.T @ (D_block @ (A @ G)))
    L = (L + L.T) * 0.5
    return L.tocsr()


def max_diffusion_rate(mesh, gamma, alpha_cap=ALPHA_CAP):
    """Largest per-face diffusion rate max(alpha1, alpha2); 1 when gamma=0."""
    if gamma == 0.0:
        return 1.0
    tri = mesh.vertices[mesh.faces]
    _, _, _, _, _, a1, a2 = _batched_directors(tri, gamma, alpha_cap)
    return float(np.maximum(a1, a2).max())


def dump_operator(matrix, path):
    """Debug dump: coordinate-list text triples row col value."""
    coo = sp.coo_matrix(matrix)
    lines = [
        f"{r} {c} {v:.17g}" for r, c, v in zip(coo.row, coo.col, coo.data)
    ]
    from pathlib import Path

    Path(path).write_text("\n".join(lines) + "\n")
