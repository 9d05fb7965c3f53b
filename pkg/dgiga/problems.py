"""
dgiga - Problems v1.0
Registry of manufactured solutions: exact solution, gradient, source and
Dirichlet data, with the regularity used for rate prediction.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .analysis import admissible_p_bound, predicted_rate
from .config import SolverConfig
from .errors import ParametricDomainError

Field_ = Callable[[np.ndarray], np.ndarray]

SMOOTH_FREQUENCY = 2.5 * math.pi


@dataclass
class ProblemSpec:
    """Closed-form problem data with f = −div(α∇u) and u_D = u on the boundary."""
    name: str
    dim: int
    exact: Field_
    gradient: Field_
    source: Field_
    dirichlet: Field_
    alpha_field: Field_
    regularity: Tuple[float, float] = (math.inf, 2.0)
    alpha: Optional[Tuple[float, ...]] = None
    config_name: Optional[str] = None
    description: str = ""
    params: Dict[str, float] = field(default_factory=dict)

    def predicted_rate(self, degree: int) -> float:
        l, p = self.regularity
        return predicted_rate(degree, l, p, self.dim)


def _points(x: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _constant(value: float) -> Field_:
    return lambda x: np.full(len(_points(x)), float(value))


# ============================================================================
# Smooth solution: product of sines
# ============================================================================

def problem_smooth(d: int = 2, alpha: float = 1.0) -> ProblemSpec:
    """u = Π sin(2.5π x_i); −Δu = d(2.5π)² u."""
    d = int(d)
    if d not in (2, 3):
        raise ParametricDomainError(f"smooth problem is defined for d = 2, 3, got {d}")
    c = SMOOTH_FREQUENCY

    def exact(x):
        return np.prod(np.sin(c * _points(x)), axis=1)

    def gradient(x):
        x = _points(x)
        s, co = np.sin(c * x), np.cos(c * x)
        g = np.empty_like(x)
        for i in range(x.shape[1]):
            g[:, i] = c * co[:, i] * np.prod(np.delete(s, i, axis=1), axis=1)
        return g

    def source(x):
        return d * c * c * alpha * exact(x)

    return ProblemSpec(
        name="smooth", dim=d, exact=exact, gradient=gradient, source=source, dirichlet=exact,
        alpha_field=_constant(alpha), config_name=f"smooth{d}d.json",
        description=f"sin(2.5πx) product in {d}D, α = {alpha}", params={"alpha": alpha},
    )


# ============================================================================
# Low regularity: u = |x|^λ
# ============================================================================

def lowreg_exponent(d: int, l: float, p: float) -> float:
    """λ placing |x|^λ just inside W^{l,p} (and outside W^{l,2})."""
    return l - d / p + SolverConfig.LAMBDA_OFFSET


def problem_lowreg(d: int = 3, l: float = 2.0, p: float = 1.4) -> ProblemSpec:
    """u = |x|^λ with a point singularity at the origin."""
    d = int(d)
    if d not in (2, 3):
        raise ParametricDomainError(f"low-regularity problem is defined for d = 2, 3, got {d}")
    if l < 2 or not admissible_p_bound(l, d) < p <= 2.0:
        raise ParametricDomainError(
            f"(l, p) = ({l}, {p}) is not admissible in {d}D: need l >= 2 and "
            f"{admissible_p_bound(l, d):.4f} < p <= 2")
    lam = lowreg_exponent(d, l, p)

    def radius(x):
        return np.linalg.norm(_points(x), axis=1)

    def exact(x):
        r = radius(x)
        return np.where(r > 0.0, np.power(np.maximum(r, 1e-300), lam), 0.0)

    def gradient(x):
        x = _points(x)
        r = np.maximum(radius(x), 1e-300)
        return lam * np.power(r, lam - 2.0)[:, None] * x

    def source(x):
        r = np.maximum(radius(x), 1e-300)
        return -lam * (lam + d - 2.0) * np.power(r, lam - 2.0)

    return ProblemSpec(
        name="lowreg", dim=d, exact=exact, gradient=gradient, source=source, dirichlet=exact,
        alpha_field=_constant(1.0), regularity=(l, p), config_name=f"lowreg{d}d.json",
        description=f"|x|^λ, λ = {lam:.4f} (l = {l}, p = {p})", params={"l": l, "p": p, "lambda": lam},
    )


# ============================================================================
# Solutions inside the discrete space (patch tests)
# ============================================================================

def problem_polynomial(d: int = 2, alpha: float = 1.0) -> ProblemSpec:
    """Quadratic u = x₀ + Σ x_i² + ½ Σ_{i<j} x_i x_j; exact for k ≥ 2 on affine patches."""
    d = int(d)

    def exact(x):
        x = _points(x)
        cross = sum(x[:, i] * x[:, j] for i in range(d) for j in range(i + 1, d))
        return x[:, 0] + np.sum(x * x, axis=1) + 0.5 * cross

    def gradient(x):
        x = _points(x)
        g = 2.0 * x + 0.5 * (np.sum(x, axis=1, keepdims=True) - x)
        g[:, 0] += 1.0
        return g

    return ProblemSpec(
        name="polynomial", dim=d, exact=exact, gradient=gradient,
        source=_constant(-2.0 * d * alpha), dirichlet=exact, alpha_field=_constant(alpha),
        config_name=f"twopatch{d}d.json" if d == 2 else None,
        description="quadratic polynomial (in-space for k >= 2)", params={"alpha": alpha},
    )


def problem_bilinear(d: int = 2, alpha: float = 1.0) -> ProblemSpec:
    """Multilinear u = 1 + Σ (i+1) x_i + Π x_i; harmonic, exact for k ≥ 1 on affine patches."""
    d = int(d)

    def exact(x):
        x = _points(x)
        return 1.0 + x @ np.arange(1.0, d + 1.0) + np.prod(x, axis=1)

    def gradient(x):
        x = _points(x)
        g = np.tile(np.arange(1.0, d + 1.0), (len(x), 1))
        for i in range(d):
            g[:, i] += np.prod(np.delete(x, i, axis=1), axis=1)
        return g

    return ProblemSpec(
        name="bilinear", dim=d, exact=exact, gradient=gradient, source=_constant(0.0),
        dirichlet=exact, alpha_field=_constant(alpha),
        config_name=f"twopatch{d}d.json" if d == 2 else None,
        description="multilinear harmonic function (in-space for k >= 1)", params={"alpha": alpha},
    )


# ============================================================================
# Discontinuous coefficient across x = 0
# ============================================================================

def problem_alpha_jump(alpha_left: float = 1.0, alpha_right: float = 10.0) -> ProblemSpec:
    """u = sin(cx) sin(cy) / α(x) with α = α_L for x < 0 and α_R for x > 0.

    u and the normal flux α ∂u/∂x are continuous across x = 0; f = 2c² sin(cx) sin(cy).
    """
    if not (alpha_left > 0.0 and alpha_right > 0.0):
        raise ParametricDomainError("diffusion coefficients must be positive")
    c = SMOOTH_FREQUENCY

    def alpha_field(x):
        return np.where(_points(x)[:, 0] < 0.0, alpha_left, alpha_right)

    def exact(x):
        x = _points(x)
        return np.sin(c * x[:, 0]) * np.sin(c * x[:, 1]) / alpha_field(x)

    def gradient(x):
        x = _points(x)
        a = alpha_field(x)
        return np.stack([c * np.cos(c * x[:, 0]) * np.sin(c * x[:, 1]) / a,
                         c * np.sin(c * x[:, 0]) * np.cos(c * x[:, 1]) / a], axis=1)

    def source(x):
        x = _points(x)
        return 2.0 * c * c * np.sin(c * x[:, 0]) * np.sin(c * x[:, 1])

    return ProblemSpec(
        name="alpha_jump", dim=2, exact=exact, gradient=gradient, source=source, dirichlet=exact,
        alpha_field=alpha_field, alpha=(float(alpha_left), float(alpha_right)),
        config_name="alpha_jump2d.json",
        description=f"flux-continuous solution with α = ({alpha_left}, {alpha_right})",
        params={"alpha_left": alpha_left, "alpha_right": alpha_right},
    )


# ============================================================================
# Utility Functions
# ============================================================================

PROBLEMS: Dict[str, Callable[..., ProblemSpec]] = {
    "smooth": problem_smooth,
    "lowreg": problem_lowreg,
    "polynomial": problem_polynomial,
    "bilinear": problem_bilinear,
    "alpha_jump": problem_alpha_jump,
}


def get_problem(name: str, **params) -> ProblemSpec:
    """Build a registry problem by name; ``params`` go to its builder."""
    builder = PROBLEMS.get(name.lower())
    if builder is None:
        raise ParametricDomainError(f"unknown problem '{name}'; choose from {sorted(PROBLEMS)}")
    return builder(**params)


def list_problems() -> Dict[str, str]:
    return {name: (builder.__doc__ or "").strip().splitlines()[0] for name, builder in PROBLEMS.items()}


def laplacian_fd(u: Field_, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference Laplacian of u at points (m, d)."""
    x = _points(x)
    centre = u(x)
    total = np.zeros(len(x))
    for i in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[i] = step
        total += (u(x + e) - 2.0 * centre + u(x - e)) / (step * step)
    return total


def manufactured_residual(problem: ProblemSpec, points: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """|f + αΔu| / max(|f|, 1) at points away from interfaces of α."""
    x = _points(points)
    fd = -problem.alpha_field(x) * laplacian_fd(problem.exact, x, step)
    f = problem.source(x)
    return np.abs(fd - f) / np.maximum(np.abs(f), 1.0)
