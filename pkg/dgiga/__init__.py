"""
dgiga - Multipatch dG-IgA Package v1.0
Discontinuous Galerkin isogeometric solver for diffusion problems with
patch-wise coefficients on non-matching meshes, with a convergence-study harness.
"""

from .config import SolverConfig
from .errors import (
    DGIGAError,
    ParametricDomainError,
    DegenerateGeometryError,
    ConfigError,
    InterfaceMismatchError,
    OverlapError,
    AlphaError,
    ContractError,
    SolverError,
    SolverBreakdownError,
)
from .splines import (
    KnotVector,
    TensorSplineSpace,
    SplineCoefficients,
    make_knots,
    find_span,
    eval_basis,
    eval_tensor_basis,
    eval_tensor_basis_batch,
    quasi_interpolate,
)
from .geometry import (
    FaceSelector,
    InterfaceFace,
    BoundaryFace,
    GeometryPatch,
    MultiPatchDomain,
    map_point,
    jacobian,
    face_normal,
    verify_interface,
    check_domain,
    refine_dyadic,
    box_patch,
    quarter_annulus_patch,
)
from .quadrature import gauss_rule, element_quadrature, merge_interface, face_quadrature
from .assembly import (
    Scheme,
    DGConfig,
    DofMap,
    DGSystem,
    assemble_volume,
    assemble_interface,
    assemble_penalty,
    assemble_rhs,
    assemble,
    dg_norm_matrix,
    coercivity_probe,
)
from .solver import SolveReport, solve_spd, solve_general, dense_solve
from .analysis import (
    ErrorRecord,
    ConvergenceReport,
    dg_norm_error,
    l2_error,
    observed_rates,
    predicted_rate,
)
from .problems import ProblemSpec, get_problem, problem_smooth, problem_lowreg
from .domain_loader import StudyConfig, load_config
from .study_runner import StudyRunner, run_study, emit_report, sample_solution

__all__ = [
    # Config
    "SolverConfig",
    # Errors
    "DGIGAError",
    "ParametricDomainError",
    "DegenerateGeometryError",
    "ConfigError",
    "InterfaceMismatchError",
    "OverlapError",
    "AlphaError",
    "ContractError",
    "SolverError",
    "SolverBreakdownError",
    # Splines
    "KnotVector",
    "TensorSplineSpace",
    "SplineCoefficients",
    "make_knots",
    "find_span",
    "eval_basis",
    "eval_tensor_basis",
    "eval_tensor_basis_batch",
    "quasi_interpolate",
    # Geometry
    "FaceSelector",
    "InterfaceFace",
    "BoundaryFace",
    "GeometryPatch",
    "MultiPatchDomain",
    "map_point",
    "jacobian",
    "face_normal",
    "verify_interface",
    "check_domain",
    "refine_dyadic",
    "box_patch",
    "quarter_annulus_patch",
    # Quadrature
    "gauss_rule",
    "element_quadrature",
    "merge_interface",
    "face_quadrature",
    # Assembly
    "Scheme",
    "DGConfig",
    "DofMap",
    "DGSystem",
    "assemble_volume",
    "assemble_interface",
    "assemble_penalty",
    "assemble_rhs",
    "assemble",
    "dg_norm_matrix",
    "coercivity_probe",
    # Solver
    "SolveReport",
    "solve_spd",
    "solve_general",
    "dense_solve",
    # Analysis
    "ErrorRecord",
    "ConvergenceReport",
    "dg_norm_error",
    "l2_error",
    "observed_rates",
    "predicted_rate",
    # Study harness
    "ProblemSpec",
    "get_problem",
    "problem_smooth",
    "problem_lowreg",
    "StudyConfig",
    "load_config",
    "StudyRunner",
    "run_study",
    "emit_report",
    "sample_solution",
]
