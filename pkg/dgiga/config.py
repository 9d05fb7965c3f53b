"""
dgiga - Configuration v1.0
Externalized constants and configuration for the dG-IgA solver.
"""

import os
from typing import Dict, Any

# Load .env file if it exists
try:
    from dotenv import load_dotenv
    load_dotenv()  # Loads from .env file in project root
except ImportError:
    pass  # dotenv not installed, rely on environment variables


# Environment overrides
LOG_LEVEL = os.environ.get("DGIGA_LOG_LEVEL", "WARNING").upper()


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return float(raw)


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


class SolverConfig:
    """Centralized configuration for the dG-IgA solver."""

    # Linear solver
    SOLVER_TOL: float = _env_float("DGIGA_SOLVER_TOL", 1e-10)
    MAX_ITER_FACTOR: int = 10
    MAX_RESTARTS: int = 2
    SYMMETRY_CHECK_TOL: float = 1e-10
    SIP_SYMMETRY_TOL: float = 1e-12
    DENSE_ORACLE_MAX_DOFS: int = 2000

    # Mesh and geometry checks
    QUASI_UNIFORMITY_BOUND: float = 4.0
    JACOBIAN_RATIO_BOUND: float = 1.0e3
    JACOBIAN_SAMPLES: int = 10
    DEGENERATE_DET: float = 1e-14
    INTERFACE_TOL: float = 1e-10
    INTERFACE_SAMPLES: int = 5
    OVERLAP_SAMPLES: int = 4
    BREAKPOINT_TOL: float = 1e-12

    # Study defaults
    BASE_ELEMENTS: int = 2
    LAMBDA_OFFSET: float = 0.01
    MAX_GAUSS_POINTS: int = 30

    # Coercivity probe
    COERCIVITY_PROBE_SAMPLES: int = 20
    COERCIVITY_PROBE_SEED: int = 1234

    # Assembly
    WORKERS: int = _env_int("DGIGA_WORKERS", 1)

    @classmethod
    def default_mu(cls, degree: int, dim: int) -> float:
        """Degree-dependent interior penalty parameter 2(k+1)(k+d)."""
        return 2.0 * (degree + 1) * (degree + dim)

    @classmethod
    def quadrature_points(cls, degree: int, purpose: str = "form") -> int:
        """Gauss points per axis: k+1 for bilinear forms, k+2 for loads and error norms."""
        if purpose == "form":
            return degree + 1
        return degree + 2

    @classmethod
    def max_iterations(cls, dofs: int) -> int:
        return max(cls.MAX_ITER_FACTOR * dofs, 10)

    @classmethod
    def to_dict(cls) -> Dict[str, Any]:
        """Export configuration as dictionary."""
        return {
            "solver_tol": cls.SOLVER_TOL,
            "max_iter_factor": cls.MAX_ITER_FACTOR,
            "quasi_uniformity_bound": cls.QUASI_UNIFORMITY_BOUND,
            "jacobian_ratio_bound": cls.JACOBIAN_RATIO_BOUND,
            "interface_tol": cls.INTERFACE_TOL,
            "base_elements": cls.BASE_ELEMENTS,
            "lambda_offset": cls.LAMBDA_OFFSET,
            "workers": cls.WORKERS,
        }
