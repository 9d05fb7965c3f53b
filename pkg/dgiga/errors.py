"""
dgiga - Errors v1.0
Exception hierarchy shared by all solver modules.
"""


class DGIGAError(Exception):
    """Base class for all solver errors."""


class ParametricDomainError(DGIGAError, ValueError):
    """An argument lies outside its admissible range (e.g. x̂ outside [0,1])."""


class DegenerateGeometryError(DGIGAError):
    """Singular Jacobian or degenerate face tangent."""


class ConfigError(DGIGAError):
    """The multipatch configuration file cannot be parsed or is malformed."""


class InterfaceMismatchError(DGIGAError):
    """A declared interface fails the geometric coincidence check."""

    def __init__(self, message: str, max_mismatch: float = float("nan"), sample=None):
        super().__init__(message)
        self.max_mismatch = max_mismatch
        self.sample = sample


class OverlapError(DGIGAError):
    """Two patches overlap."""


class AlphaError(DGIGAError):
    """A diffusion coefficient is not strictly positive."""


class ContractError(DGIGAError):
    """A caller violated an operation's precondition."""


class SolverError(DGIGAError):
    """The iterative solver did not converge."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class SolverBreakdownError(SolverError):
    """The Krylov iteration broke down (singular or indefinite operator)."""


# Exit codes used by the CLI
VALIDATION_ERRORS = (
    ConfigError,
    InterfaceMismatchError,
    OverlapError,
    AlphaError,
    DegenerateGeometryError,
    ParametricDomainError,
    ContractError,
)
