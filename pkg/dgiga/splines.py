"""
dgiga - Spline Core v1.0
Univariate and tensor-product B-spline bases, spline evaluation and the local
quasi-interpolant used for approximation estimates.

Global basis numbering is C-order over the per-axis indices (last axis fastest),
so a coefficient vector reshapes to ``space.shape``.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .config import SolverConfig
from .errors import ParametricDomainError

logger = logging.getLogger(__name__)

ScalarField = Callable[[np.ndarray], np.ndarray]


# ─────────────────────────────────────────────────────────────
# Knot vectors
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open knot vector on [0,1] with degree k."""

    degree: int
    knots: np.ndarray

    def __post_init__(self):
        knots = np.array(self.knots, dtype=float)
        k = int(self.degree)
        object.__setattr__(self, "degree", k)
        object.__setattr__(self, "knots", knots)
        knots.setflags(write=False)

        if k < 0:
            raise ParametricDomainError(f"degree must be non-negative, got {k}")
        if knots.ndim != 1:
            raise ParametricDomainError("knots must be a one-dimensional sequence")
        if np.any(np.diff(knots) < 0):
            raise ParametricDomainError("knots must be non-decreasing")
        if len(knots) - k - 1 < k + 1:
            raise ParametricDomainError(
                f"knot vector of length {len(knots)} has fewer than k+1={k + 1} basis functions")
        if knots[0] != 0.0 or knots[-1] != 1.0:
            raise ParametricDomainError("knots must span exactly [0, 1]")
        if np.any(knots[:k + 1] != 0.0) or np.any(knots[-(k + 1):] != 1.0):
            raise ParametricDomainError(f"end knots must have multiplicity k+1={k + 1}")
        if knots[k + 1] == 0.0 or knots[-(k + 2)] == 1.0:
            raise ParametricDomainError(f"end knots must have multiplicity exactly k+1={k + 1}")
        interior, counts = np.unique(knots[k + 1:-(k + 1)], return_counts=True)
        if k > 0 and np.any(counts > k):
            raise ParametricDomainError(
                f"interior knot {interior[counts > k][0]} has multiplicity above k={k}")

    def __repr__(self) -> str:
        return f"KnotVector(degree={self.degree}, knots={self.knots.tolist()})"

    @property
    def num_basis(self) -> int:
        """Number of basis functions n = len(knots) - k - 1."""
        return len(self.knots) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        """Knots with duplicates removed."""
        return np.unique(self.knots)

    @property
    def span_indices(self) -> np.ndarray:
        """Knot indices i of the nonempty spans [knots[i], knots[i+1])."""
        return np.nonzero(self.knots[1:] > self.knots[:-1])[0]

    @property
    def num_spans(self) -> int:
        return len(self.span_indices)

    @property
    def span_lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def mesh_size(self) -> float:
        return float(self.span_lengths.max())

    def greville(self) -> np.ndarray:
        """Greville abscissae (running averages of k consecutive interior knots)."""
        k = self.degree
        if k == 0:
            return 0.5 * (self.knots[1:] + self.knots[:-1])
        idx = np.arange(self.num_basis)[:, None] + np.arange(1, k + 1)[None, :]
        return np.clip(self.knots[idx].mean(axis=1), 0.0, 1.0)

    def refine(self) -> "KnotVector":
        """Dyadic refinement: insert the midpoint of every nonempty span once."""
        bp = self.breakpoints
        midpoints = 0.5 * (bp[1:] + bp[:-1])
        return KnotVector(self.degree, np.sort(np.concatenate((self.knots, midpoints))))


def make_knots(degree: int, elements: int) -> KnotVector:
    """Uniform open knot vector on [0,1] with single interior knots."""
    if elements < 1:
        raise ParametricDomainError(f"need at least one element, got {elements}")
    interior = np.arange(1, elements) / elements
    return KnotVector(degree, np.concatenate((np.zeros(degree + 1), interior, np.ones(degree + 1))))


# ─────────────────────────────────────────────────────────────
# Univariate evaluation (Cox-de Boor)
# ─────────────────────────────────────────────────────────────

def _check_unit(x: np.ndarray) -> None:
    if np.any(x < 0.0) or np.any(x > 1.0) or np.any(np.isnan(x)):
        bad = x[(x < 0.0) | (x > 1.0) | np.isnan(x)]
        raise ParametricDomainError(f"parametric coordinate {bad.flat[0]!r} outside [0, 1]")


def find_spans(kv: KnotVector, xhat) -> np.ndarray:
    """Vectorized :func:`find_span`."""
    x = np.asarray(xhat, dtype=float)
    _check_unit(x)
    spans = np.searchsorted(kv.knots, x, side="right") - 1
    # half-open spans, clamped so x=1 lands in the last nonempty span
    return np.clip(spans, kv.degree, kv.num_basis - 1)


def find_span(kv: KnotVector, xhat: float) -> int:
    """Return i with knots[i] <= xhat < knots[i+1]; xhat = 1 maps to the last nonempty span."""
    return int(find_spans(kv, np.array([xhat]))[0])


def _basis_ders(kv: KnotVector, spans: np.ndarray, x: np.ndarray, nderiv: int) -> np.ndarray:
    """Nonzero basis functions and derivatives, shape (m, nderiv+1, k+1)."""
    p = kv.degree
    U = kv.knots
    m = x.size
    ndu = np.empty((p + 1, p + 1, m))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, m))
    right = np.zeros((p + 1, m))
    for j in range(1, p + 1):
        left[j] = x - U[spans + 1 - j]
        right[j] = U[spans + j] - x
        saved = np.zeros(m)
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nderiv + 1, p + 1, m))
    for j in range(p + 1):
        ders[0, j] = ndu[j, p]

    nd = min(nderiv, p)
    a = np.zeros((2, p + 1, m))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, nd + 1):
            d = np.zeros(m)
            rk, pk = r - k, p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d = d + a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d = d + a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1

    factor = p
    for k in range(1, nd + 1):
        ders[k] *= factor
        factor *= p - k
    return ders.transpose(2, 0, 1)


def eval_basis_many(kv: KnotVector, xhat, nderiv: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate the k+1 nonzero basis functions at many points.

    Returns ``(first, table)`` where ``first[m]`` is the global index of the first
    active function at point m and ``table`` has shape (m, nderiv+1, k+1).
    """
    if nderiv < 0 or nderiv > 2:
        raise ParametricDomainError(f"nderiv must be in 0..2, got {nderiv}")
    x = np.atleast_1d(np.asarray(xhat, dtype=float))
    spans = find_spans(kv, x)
    return spans - kv.degree, _basis_ders(kv, spans, x, nderiv)


def eval_basis(kv: KnotVector, xhat: float, nderiv: int = 0) -> np.ndarray:
    """Nonzero basis values and derivatives at one point, shape (nderiv+1, k+1)."""
    _, table = eval_basis_many(kv, np.array([xhat], dtype=float), nderiv)
    return table[0]


# ─────────────────────────────────────────────────────────────
# Tensor-product spaces
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class TensorSplineSpace:
    """d-variate tensor-product B-spline space with the same degree on every axis."""

    axes: Tuple[KnotVector, ...]

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= 3:
            raise ParametricDomainError(f"dimension must be 1, 2 or 3, got {len(axes)}")
        degrees = {kv.degree for kv in axes}
        if len(degrees) != 1:
            raise ParametricDomainError(f"all axes must share one degree, got {sorted(degrees)}")

    @classmethod
    def uniform(cls, degree: int, elements: Union[int, Sequence[int]], dim: int = 2) -> "TensorSplineSpace":
        if isinstance(elements, (int, np.integer)):
            elements = [int(elements)] * dim
        return cls(tuple(make_knots(degree, n) for n in elements))

    def __repr__(self) -> str:
        return f"TensorSplineSpace(degree={self.degree}, elements={self.num_elements})"

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def degree(self) -> int:
        return self.axes[0].degree

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(kv.num_basis for kv in self.axes)

    @property
    def num_basis(self) -> int:
        return int(np.prod(self.shape))

    @property
    def local_size(self) -> int:
        """Number of basis functions active on one element, (k+1)^d."""
        return (self.degree + 1) ** self.dim

    @property
    def num_elements(self) -> Tuple[int, ...]:
        return tuple(kv.num_spans for kv in self.axes)

    @property
    def element_count(self) -> int:
        return int(np.prod(self.num_elements))

    def element_bounds(self, index: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper corners of the parametric micro-element with multi-index ``index``."""
        if len(index) != self.dim:
            raise ParametricDomainError(f"element index {index} has wrong length")
        lower, upper = [], []
        for kv, e in zip(self.axes, index):
            bp = kv.breakpoints
            if not 0 <= e < len(bp) - 1:
                raise ParametricDomainError(f"element index {tuple(index)} out of range {self.num_elements}")
            lower.append(bp[e])
            upper.append(bp[e + 1])
        return np.array(lower), np.array(upper)

    def element_of(self, point: Sequence[float]) -> Tuple[int, ...]:
        """Multi-index of the micro-element containing ``point`` (half-open convention)."""
        index = []
        for kv, x in zip(self.axes, point):
            span = find_span(kv, x)
            index.append(int(np.searchsorted(kv.span_indices, span)))
        return tuple(index)

    @property
    def mesh_size(self) -> float:
        """Largest parametric knot-span length h over all axes."""
        return max(kv.mesh_size for kv in self.axes)

    @property
    def min_element_edge(self) -> float:
        return min(float(kv.span_lengths.min()) for kv in self.axes)

    def quasi_uniformity(self) -> float:
        """Ratio of the largest to the smallest element edge."""
        return self.mesh_size / self.min_element_edge

    def is_quasi_uniform(self, bound: Optional[float] = None) -> bool:
        bound = SolverConfig.QUASI_UNIFORMITY_BOUND if bound is None else bound
        return self.quasi_uniformity() <= bound

    def refine(self) -> "TensorSplineSpace":
        return TensorSplineSpace(tuple(kv.refine() for kv in self.axes))


@dataclass(frozen=True)
class TensorBasis:
    """Nonzero tensor basis functions at one point."""
    indices: np.ndarray
    values: np.ndarray
    gradients: Optional[np.ndarray] = None


@dataclass(frozen=True)
class TensorBasisBatch:
    """Nonzero tensor basis functions at m points.

    indices (m, nloc), values (m, nloc), gradients (m, nloc, d) or None.
    """
    indices: np.ndarray
    values: np.ndarray
    gradients: Optional[np.ndarray] = None


def _local_pattern(degree: int, dim: int) -> np.ndarray:
    return np.indices((degree + 1,) * dim).reshape(dim, -1)


def _combine(space: TensorSplineSpace, firsts: List[np.ndarray], tables: List[np.ndarray],
             nderiv: int) -> TensorBasisBatch:
    loc = _local_pattern(space.degree, space.dim)
    multi = tuple(f[:, None] + loc[a][None, :] for a, f in enumerate(firsts))
    indices = np.ravel_multi_index(multi, space.shape)

    values = np.ones(indices.shape)
    for a, t in enumerate(tables):
        values = values * t[:, 0, loc[a]]

    gradients = None
    if nderiv >= 1:
        gradients = np.ones(indices.shape + (space.dim,))
        for c in range(space.dim):
            for a, t in enumerate(tables):
                gradients[:, :, c] *= t[:, 1 if a == c else 0, loc[a]]
    return TensorBasisBatch(indices, values, gradients)


def _as_points(space: TensorSplineSpace, points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(1, -1) if space.dim > 1 or pts.size == 1 else pts.reshape(-1, 1)
    if pts.shape[-1] != space.dim:
        raise ParametricDomainError(f"points must have {space.dim} coordinates, got shape {pts.shape}")
    return pts


def eval_tensor_basis_batch(space: TensorSplineSpace, points, nderiv: int = 1) -> TensorBasisBatch:
    """Evaluate the nonzero tensor basis functions at arbitrary points, shape (m, d)."""
    if nderiv not in (0, 1):
        raise ParametricDomainError(f"nderiv must be 0 or 1, got {nderiv}")
    pts = _as_points(space, points)
    firsts, tables = [], []
    for a, kv in enumerate(space.axes):
        f, t = eval_basis_many(kv, pts[:, a], nderiv)
        firsts.append(f)
        tables.append(t)
    return _combine(space, firsts, tables, nderiv)


def eval_tensor_basis(space: TensorSplineSpace, xhat, nderiv: int = 1) -> TensorBasis:
    """(k+1)^d nonzero basis values (and parametric gradients) with global indices."""
    batch = eval_tensor_basis_batch(space, np.asarray(xhat, dtype=float).reshape(1, space.dim), nderiv)
    grads = None if batch.gradients is None else batch.gradients[0]
    return TensorBasis(batch.indices[0], batch.values[0], grads)


def tabulate_axes(space: TensorSplineSpace, axis_points: Sequence[np.ndarray],
                  nderiv: int = 1) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Per-axis ``(first, table)`` at 1D point sets, for reuse on tensor grids."""
    return [eval_basis_many(kv, pts, nderiv) for kv, pts in zip(space.axes, axis_points)]


def eval_tensor_basis_grid(space: TensorSplineSpace,
                           axis_tables: Sequence[Tuple[np.ndarray, np.ndarray]],
                           nderiv: int = 1) -> TensorBasisBatch:
    """Tensor basis on the C-ordered grid spanned by pre-tabulated 1D point sets."""
    grids = np.meshgrid(*[np.arange(len(f)) for f, _ in axis_tables], indexing="ij")
    firsts = [f[g.ravel()] for (f, _), g in zip(axis_tables, grids)]
    tables = [t[g.ravel()] for (_, t), g in zip(axis_tables, grids)]
    return _combine(space, firsts, tables, nderiv)


# ─────────────────────────────────────────────────────────────
# Spline fields
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class SplineCoefficients:
    """Coefficients of a scalar (n,) or vector-valued (n, c) spline field."""

    space: TensorSplineSpace
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape[0] != self.space.num_basis or values.ndim > 2:
            raise ParametricDomainError(
                f"coefficient array of shape {values.shape} does not match "
                f"{self.space.num_basis} basis functions")

    @property
    def num_components(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def evaluate(self, points) -> np.ndarray:
        """Field values at parametric points (m, d): shape (m,) or (m, c)."""
        batch = eval_tensor_basis_batch(self.space, points, nderiv=0)
        c = self.values[batch.indices]
        if self.values.ndim == 1:
            return np.einsum("mn,mn->m", batch.values, c)
        return np.einsum("mn,mnc->mc", batch.values, c)

    def gradient(self, points) -> np.ndarray:
        """Parametric gradient at points: shape (m, d) or (m, c, d)."""
        batch = eval_tensor_basis_batch(self.space, points, nderiv=1)
        c = self.values[batch.indices]
        if self.values.ndim == 1:
            return np.einsum("mnd,mn->md", batch.gradients, c)
        return np.einsum("mnd,mnc->mcd", batch.gradients, c)


# ─────────────────────────────────────────────────────────────
# Quasi-interpolation
# ─────────────────────────────────────────────────────────────

def _local_functionals(kv: KnotVector) -> Tuple[np.ndarray, np.ndarray]:
    """Sample points (n, k+1) and weights (n, k+1) of the 1D local projector.

    Functional j interpolates f on one knot span inside supp(B_j) by the k+1 active
    B-splines and keeps the coefficient of B_j, so any spline is reproduced exactly.
    """
    k = kv.degree
    n = kv.num_basis
    U = kv.knots
    nodes = (np.arange(k + 1) + 0.5) / (k + 1)
    points = np.empty((n, k + 1))
    weights = np.empty((n, k + 1))
    for j in range(n):
        candidates = [i for i in range(j, j + k + 1) if U[i + 1] > U[i]]
        middle = j + 0.5 * k
        span = min(candidates, key=lambda i: (-(U[i + 1] - U[i]), abs(i - middle), i))
        x = U[span] + (U[span + 1] - U[span]) * nodes
        table = _basis_ders(kv, np.full(k + 1, span), x, 0)[:, 0, :]
        inverse = np.linalg.inv(table)
        points[j] = x
        weights[j] = inverse[j - (span - k), :]
    return points, weights


def quasi_interpolate(space: TensorSplineSpace, f: ScalarField) -> SplineCoefficients:
    """Local spline projector of a scalar field given on [0,1]^d.

    ``f`` maps an array of points (m, d) to values (m,).
    """
    d = space.dim
    functionals = [_local_functionals(kv) for kv in space.axes]
    multi = np.indices(space.shape).reshape(d, -1).T
    loc = _local_pattern(space.degree, d).T

    points = np.empty((multi.shape[0], loc.shape[0], d))
    weights = np.ones((multi.shape[0], loc.shape[0]))
    for a, (x, w) in enumerate(functionals):
        points[:, :, a] = x[multi[:, a][:, None], loc[:, a][None, :]]
        weights *= w[multi[:, a][:, None], loc[:, a][None, :]]

    samples = np.asarray(f(points.reshape(-1, d)), dtype=float).reshape(weights.shape)
    coefficients = np.einsum("nq,nq->n", weights, samples)
    logger.debug("quasi-interpolated onto %s", space)
    return SplineCoefficients(space, coefficients)
