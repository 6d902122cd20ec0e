"""Morphology-preserving remeshing of genus-0 surfaces and planar contours.

Surfaces are decomposed over spheroidal harmonic bases; remeshing then
moves only the sampling coordinates by nonlinear density-equalizing
diffusion, leaving the harmonic weights — the morphology — untouched.
"""

from .errors import (
    EngineError,
    EquimeshError,
    FoldError,
    FormatError,
    GuardError,
    IntersectionError,
    SingularityError,
    SolverError,
    TopologyError,
)
from .mesh import (
    Contour2D,
    QualityReport,
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
from .spheroidal import (
    KINDS,
    OBLATE,
    OBLATE_HEMISPHEROID,
    PROLATE,
    PROLATE_HEMISPHEROID,
    CurvilinearCoords,
    SpheroidDomain,
    align_to_principal_axes,
    fit_domain,
    forward_coords,
    inverse_coords,
    map_to_domain,
    pullback,
    sample_cap_grid,
    sample_icosphere,
    surface_normals,
    xi_of_eta,
)
from .harmonics import (
    ExpansionConfig,
    FourierWeights,
    PsdDescriptors,
    basis_matrix,
    decompose,
    load_weights,
    normalized_alp,
    psd_descriptors,
    reconstruct_fast,
    reconstruct_full,
    save_weights,
)
from .operators import (
    diffusion_tensors,
    face_directors,
    face_mass_matrix,
    gradient_operator,
    laplacian_aniso,
    laplacian_iso,
    max_diffusion_rate,
    rodrigues_quarter_turn,
    vertex_mass_matrix,
)
from .solver import SparseSystem, backward_euler_step, estimate_dt, solve_sparse
from .diffusion import (
    BoundaryCondition,
    DiffusionConfig,
    DiffusionTrace,
    apply_boundary_abc,
    diffuse_remesh,
    run_hierarchical,
    update_coordinates,
)
from .contour2d import (
    ContourWeights,
    EllipticDomain,
    decompose_contour,
    elliptic_coords,
    fit_ellipse,
    inverse_elliptic,
    reconstruct_contour,
    remesh_contour,
    remesh_microstructure_2d,
    segment_budgets,
)

__version__ = "0.1.0"
