"""
dgiga - Geometry v1.0
Patch parametrizations, Jacobians, multipatch topology (interfaces and boundary
faces) and the geometric checks run when a domain is loaded.

Each patch keeps its geometry space and its solution space apart: refinement
enriches the solution spaces only, so the geometry is exact on every level.
"""

import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.spatial.distance import pdist

from .config import SolverConfig
from .errors import (
    AlphaError,
    ConfigError,
    DegenerateGeometryError,
    InterfaceMismatchError,
    OverlapError,
    ParametricDomainError,
)
from .splines import (
    KnotVector,
    SplineCoefficients,
    TensorBasisBatch,
    TensorSplineSpace,
    eval_tensor_basis_batch,
)

logger = logging.getLogger(__name__)


# ─────────────────────────────────────────────────────────────
# Faces
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FaceSelector:
    """Face of the parametric cube where x̂_axis == side (0 or 1)."""

    axis: int
    side: int

    def __post_init__(self):
        if self.side not in (0, 1):
            raise ConfigError(f"face side must be 0 or 1, got {self.side}")
        if self.axis < 0:
            raise ConfigError(f"face axis must be non-negative, got {self.axis}")

    def __str__(self) -> str:
        return f"x{self.axis}={self.side}"

    @property
    def sign(self) -> float:
        """+1 if the outward normal points toward increasing x̂_axis."""
        return 1.0 if self.side == 1 else -1.0

    def free_axes(self, dim: int) -> Tuple[int, ...]:
        return tuple(a for a in range(dim) if a != self.axis)

    def to_volume(self, t: np.ndarray, dim: int) -> np.ndarray:
        """Lift face coordinates (m, d-1) to volumetric parametric points (m, d)."""
        t = np.asarray(t, dtype=float).reshape(-1, dim - 1)
        out = np.empty((t.shape[0], dim))
        out[:, self.axis] = float(self.side)
        out[:, list(self.free_axes(dim))] = t
        return out

    def from_volume(self, x: np.ndarray, dim: int) -> np.ndarray:
        return np.asarray(x)[:, list(self.free_axes(dim))]


@dataclass(frozen=True)
class InterfaceFace:
    """Interface F_ij between ``left_patch`` (i) and ``right_patch`` (j).

    The orientation map sends left face coordinate m to right face coordinate
    ``permutation[m]``, reflected as 1 - t when ``flips[m]`` is set.
    """

    left_patch: int
    left_face: FaceSelector
    right_patch: int
    right_face: FaceSelector
    permutation: Tuple[int, ...] = (0,)
    flips: Tuple[bool, ...] = (False,)

    def __post_init__(self):
        object.__setattr__(self, "permutation", tuple(int(p) for p in self.permutation))
        object.__setattr__(self, "flips", tuple(bool(f) for f in self.flips))
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ConfigError(f"orientation permutation {self.permutation} is not a permutation")
        if len(self.flips) != len(self.permutation):
            raise ConfigError("orientation flips and permutation differ in length")
        if self.left_patch == self.right_patch:
            raise ConfigError(f"interface joins patch {self.left_patch} to itself")

    def __str__(self) -> str:
        return f"F[{self.left_patch}:{self.left_face} | {self.right_patch}:{self.right_face}]"

    def map_to_right(self, t_left: np.ndarray) -> np.ndarray:
        t_left = np.asarray(t_left, dtype=float)
        t_right = np.empty_like(t_left)
        for m, (p, flip) in enumerate(zip(self.permutation, self.flips)):
            t_right[:, p] = 1.0 - t_left[:, m] if flip else t_left[:, m]
        return t_right

    def map_to_left(self, t_right: np.ndarray) -> np.ndarray:
        t_right = np.asarray(t_right, dtype=float)
        t_left = np.empty_like(t_right)
        for m, (p, flip) in enumerate(zip(self.permutation, self.flips)):
            t_left[:, m] = 1.0 - t_right[:, p] if flip else t_right[:, p]
        return t_left

    def reversed(self) -> "InterfaceFace":
        """The same interface seen from the right patch."""
        n = len(self.permutation)
        permutation = [0] * n
        flips = [False] * n
        for m, (p, flip) in enumerate(zip(self.permutation, self.flips)):
            permutation[p] = m
            flips[p] = flip
        return InterfaceFace(self.right_patch, self.right_face, self.left_patch, self.left_face,
                             tuple(permutation), tuple(flips))


@dataclass(frozen=True)
class BoundaryFace:
    """Face of ``patch`` lying on the Dirichlet boundary."""

    patch: int
    face: FaceSelector

    def __str__(self) -> str:
        return f"B[{self.patch}:{self.face}]"


Face = Union[InterfaceFace, BoundaryFace]


# ─────────────────────────────────────────────────────────────
# Patches
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class GeometryPatch:
    """Spline parametrization Φ(x̂) = Σ_j C_j B̂_j(x̂) of one patch."""

    space: TensorSplineSpace
    control_points: np.ndarray
    patch_id: int = 0

    def __post_init__(self):
        cp = np.array(self.control_points, dtype=float)
        object.__setattr__(self, "control_points", cp)
        cp.setflags(write=False)
        if cp.shape != (self.space.num_basis, self.space.dim):
            raise ConfigError(
                f"patch {self.patch_id}: control net of shape {cp.shape} does not match "
                f"{self.space.num_basis} basis functions in {self.space.dim}D")

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def coefficients(self) -> SplineCoefficients:
        return SplineCoefficients(self.space, self.control_points)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box containing the patch (convex hull of the control net)."""
        return self.control_points.min(axis=0), self.control_points.max(axis=0)


@dataclass(frozen=True)
class Jacobian:
    matrix: np.ndarray
    det: float
    inv_transpose: np.ndarray


@dataclass(frozen=True)
class GeometryBatch:
    """Φ and its Jacobian at m points: x (m,d), matrix (m,d,d), det (m,), inv_transpose (m,d,d)."""

    x: np.ndarray
    matrix: np.ndarray
    det: np.ndarray
    inv_transpose: np.ndarray


def evaluate_geometry(patch: GeometryPatch, batch: TensorBasisBatch) -> GeometryBatch:
    """Map and Jacobian from a pre-evaluated geometry basis batch."""
    cp = patch.control_points[batch.indices]
    x = np.einsum("mn,mni->mi", batch.values, cp)
    matrix = np.einsum("mnj,mni->mij", batch.gradients, cp)
    det = np.linalg.det(matrix)
    if np.any(np.abs(det) < SolverConfig.DEGENERATE_DET):
        worst = int(np.argmin(np.abs(det)))
        raise DegenerateGeometryError(
            f"patch {patch.patch_id}: singular Jacobian (|det| = {abs(det[worst]):.3e})")
    inv_transpose = np.transpose(np.linalg.inv(matrix), (0, 2, 1))
    return GeometryBatch(x, matrix, det, inv_transpose)


def map_points(patch: GeometryPatch, xhat) -> np.ndarray:
    """Vectorized :func:`map_point` for parametric points (m, d)."""
    return patch.coefficients.evaluate(xhat)


def map_point(patch: GeometryPatch, xhat) -> np.ndarray:
    """Physical point Φ(x̂)."""
    return map_points(patch, np.asarray(xhat, dtype=float).reshape(1, patch.dim))[0]


def jacobians(patch: GeometryPatch, xhat) -> GeometryBatch:
    """Map, Jacobian, determinant and inverse-transpose at parametric points (m, d)."""
    return evaluate_geometry(patch, eval_tensor_basis_batch(patch.space, xhat, nderiv=1))


def jacobian(patch: GeometryPatch, xhat) -> Jacobian:
    """Jacobian matrix (columns ∂Φ/∂x̂_n), its determinant and inverse-transpose."""
    g = jacobians(patch, np.asarray(xhat, dtype=float).reshape(1, patch.dim))
    return Jacobian(g.matrix[0], float(g.det[0]), g.inv_transpose[0])


def normals_from_geometry(geo: GeometryBatch, face: FaceSelector) -> Tuple[np.ndarray, np.ndarray]:
    """Outward unit normals and surface factors on ``face`` (Nanson's formula)."""
    cofactor = geo.inv_transpose[:, :, face.axis] * face.sign
    length = np.linalg.norm(cofactor, axis=1)
    factor = np.abs(geo.det) * length
    if np.any(factor < SolverConfig.DEGENERATE_DET):
        raise DegenerateGeometryError(f"degenerate face tangent on {face}")
    return cofactor / length[:, None], factor


def _face_owner(face: Face) -> Tuple[int, FaceSelector]:
    if isinstance(face, InterfaceFace):
        return face.left_patch, face.left_face
    return face.patch, face.face


def face_normal(domain: "MultiPatchDomain", face: Face, xhat_face) -> Tuple[np.ndarray, float]:
    """Unit normal and surface measure factor at a point of a face.

    For an interface the normal points from the left patch into the right patch;
    for a boundary face it is the outward normal.
    """
    patch_id, selector = _face_owner(face)
    patch = domain.patches[patch_id]
    t = np.asarray(xhat_face, dtype=float).reshape(1, patch.dim - 1)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ParametricDomainError(f"face coordinate {t[0]} outside the unit face")
    geo = jacobians(patch, selector.to_volume(t, patch.dim))
    normals, factors = normals_from_geometry(geo, selector)
    return normals[0], float(factors[0])


# ─────────────────────────────────────────────────────────────
# Multipatch domain
# ─────────────────────────────────────────────────────────────

def all_faces(dim: int) -> List[FaceSelector]:
    return [FaceSelector(axis, side) for axis in range(dim) for side in (0, 1)]


@dataclass(frozen=True, eq=False)
class MultiPatchDomain:
    """Patches, interfaces, boundary faces, per-patch α and solution spaces."""

    patches: Tuple[GeometryPatch, ...]
    interfaces: Tuple[InterfaceFace, ...]
    boundary_faces: Tuple[BoundaryFace, ...]
    alpha: Tuple[float, ...]
    solution_spaces: Tuple[TensorSplineSpace, ...]

    def __post_init__(self):
        for name in ("patches", "interfaces", "boundary_faces", "solution_spaces"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

        n = len(self.patches)
        if n == 0:
            raise ConfigError("domain has no patches")
        for i, patch in enumerate(self.patches):
            if patch.patch_id != i:
                raise ConfigError(f"patch at position {i} carries id {patch.patch_id}")
        dims = {p.dim for p in self.patches} | {s.dim for s in self.solution_spaces}
        if len(dims) != 1:
            raise ConfigError(f"patches and spaces mix dimensions {sorted(dims)}")
        if len(self.alpha) != n:
            raise AlphaError(f"expected {n} diffusion coefficients, got {len(self.alpha)}")
        for i, a in enumerate(self.alpha):
            if not a > 0.0:
                raise AlphaError(f"alpha of patch {i} must be positive, got {a}")
        if len(self.solution_spaces) != n:
            raise ConfigError(f"expected {n} solution spaces, got {len(self.solution_spaces)}")
        if len({s.degree for s in self.solution_spaces}) != 1:
            raise ConfigError("all solution spaces must share one degree")
        self._check_face_claims()

    def _check_face_claims(self) -> None:
        claims: Dict[Tuple[int, FaceSelector], str] = {}

        def claim(patch: int, face: FaceSelector, owner: str) -> None:
            if not 0 <= patch < len(self.patches):
                raise ConfigError(f"{owner} refers to unknown patch {patch}")
            if face.axis >= self.dim:
                raise ConfigError(f"{owner} uses axis {face.axis} in {self.dim}D")
            key = (patch, face)
            if key in claims:
                raise ConfigError(
                    f"face {face} of patch {patch} claimed by both {claims[key]} and {owner} "
                    "(only full-face interfaces are supported)")
            claims[key] = owner

        for f in self.interfaces:
            if len(f.permutation) != self.dim - 1:
                raise ConfigError(f"{f}: orientation map must act on {self.dim - 1} face axes")
            claim(f.left_patch, f.left_face, str(f))
            claim(f.right_patch, f.right_face, str(f))
        for b in self.boundary_faces:
            claim(b.patch, b.face, str(b))
        for i in range(len(self.patches)):
            for face in all_faces(self.dim):
                if (i, face) not in claims:
                    raise ConfigError(f"face {face} of patch {i} is neither interface nor boundary")

    @classmethod
    def create(cls, patches: Sequence[GeometryPatch], interfaces: Sequence[InterfaceFace],
               alpha: Optional[Sequence[float]] = None,
               solution_spaces: Optional[Sequence[TensorSplineSpace]] = None,
               degree: int = 2, elements: Union[int, Sequence] = SolverConfig.BASE_ELEMENTS
               ) -> "MultiPatchDomain":
        """Build a domain, treating every face not claimed by an interface as boundary.

        ``elements`` is either one count for every patch and axis or one entry per patch.
        """
        patches = tuple(patches)
        dim = patches[0].dim
        claimed = {(f.left_patch, f.left_face) for f in interfaces}
        claimed |= {(f.right_patch, f.right_face) for f in interfaces}
        boundary = [BoundaryFace(i, face) for i in range(len(patches)) for face in all_faces(dim)
                    if (i, face) not in claimed]
        if alpha is None:
            alpha = [1.0] * len(patches)
        if solution_spaces is None:
            per_patch = elements if isinstance(elements, (list, tuple)) else [elements] * len(patches)
            solution_spaces = [TensorSplineSpace.uniform(degree, e, dim) for e in per_patch]
        return cls(patches, tuple(interfaces), tuple(boundary), tuple(alpha), tuple(solution_spaces))

    @property
    def dim(self) -> int:
        return self.patches[0].dim

    @property
    def num_patches(self) -> int:
        return len(self.patches)

    @property
    def spaces(self) -> Tuple[TensorSplineSpace, ...]:
        return self.solution_spaces

    @property
    def degree(self) -> int:
        return self.solution_spaces[0].degree

    @property
    def num_dofs(self) -> int:
        return sum(s.num_basis for s in self.solution_spaces)

    @property
    def diameter(self) -> float:
        """Diagonal of the bounding box of all control nets."""
        points = np.vstack([p.control_points for p in self.patches])
        return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))

    def mesh_sizes(self, spaces: Optional[Sequence[TensorSplineSpace]] = None) -> Tuple[float, ...]:
        """Parametric mesh size h_i of every patch."""
        spaces = self.solution_spaces if spaces is None else spaces
        return tuple(s.mesh_size for s in spaces)

    @property
    def h_max(self) -> float:
        return max(self.mesh_sizes())

    def interface_mesh_ratio(self) -> float:
        """Largest h_i/h_j over all interfaces (1.0 without interfaces)."""
        h = self.mesh_sizes()
        ratios = [max(h[f.left_patch] / h[f.right_patch], h[f.right_patch] / h[f.left_patch])
                  for f in self.interfaces]
        return max(ratios, default=1.0)

    def with_spaces(self, spaces: Sequence[TensorSplineSpace]) -> "MultiPatchDomain":
        return dataclasses.replace(self, solution_spaces=tuple(spaces))

    def with_degree(self, degree: int) -> "MultiPatchDomain":
        """Same meshes, solution degree replaced (interior knots kept single)."""
        spaces = [TensorSplineSpace(tuple(_with_degree(kv, degree) for kv in s.axes))
                  for s in self.solution_spaces]
        return self.with_spaces(spaces)


def _with_degree(kv: KnotVector, degree: int) -> KnotVector:
    interior = kv.breakpoints[1:-1]
    return KnotVector(degree, np.concatenate((np.zeros(degree + 1), interior, np.ones(degree + 1))))


def refine_dyadic(domain: MultiPatchDomain) -> MultiPatchDomain:
    """Halve every solution-space knot span; geometry control nets are untouched."""
    return domain.with_spaces([s.refine() for s in domain.solution_spaces])


# ─────────────────────────────────────────────────────────────
# Patch builders
# ─────────────────────────────────────────────────────────────

def box_patch(lower: Sequence[float], upper: Sequence[float], patch_id: int = 0) -> GeometryPatch:
    """Axis-aligned box as a multilinear single-element patch."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    dim = len(lower)
    space = TensorSplineSpace.uniform(1, 1, dim)
    corners = np.indices((2,) * dim).reshape(dim, -1).T
    return GeometryPatch(space, lower + corners * (upper - lower), patch_id)


def quarter_annulus_patch(r_inner: float = 1.0, r_outer: float = 2.0, patch_id: int = 0) -> GeometryPatch:
    """Quadratic B-spline quarter annulus: x̂0 runs along the arc, x̂1 outward."""
    space = TensorSplineSpace.uniform(2, 1, 2)
    arc = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    radii = np.linspace(r_inner, r_outer, 3)
    cp = np.array([r * p for p in arc for r in radii])
    return GeometryPatch(space, cp, patch_id)


# ─────────────────────────────────────────────────────────────
# Verification
# ─────────────────────────────────────────────────────────────

@dataclass
class InterfaceCheck:
    """Outcome of :func:`verify_interface`."""
    face: InterfaceFace
    passed: bool
    max_mismatch: float
    tolerance: float
    worst_left: Optional[np.ndarray] = None
    worst_right: Optional[np.ndarray] = None


def _face_grid(dim: int, samples: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, samples)
    if dim == 1:
        return np.zeros((1, 0))
    grids = np.meshgrid(*([axis] * (dim - 1)), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def verify_interface(domain: MultiPatchDomain, face: InterfaceFace,
                     samples: int = SolverConfig.INTERFACE_SAMPLES) -> InterfaceCheck:
    """Check that both parametrizations agree on orientation-mapped face samples."""
    if samples < 2:
        raise ParametricDomainError(f"need at least 2 samples per face axis, got {samples}")
    dim = domain.dim
    t_left = _face_grid(dim, samples)
    t_right = face.map_to_right(t_left)
    x_left = face.left_face.to_volume(t_left, dim)
    x_right = face.right_face.to_volume(t_right, dim)
    p_left = map_points(domain.patches[face.left_patch], x_left)
    p_right = map_points(domain.patches[face.right_patch], x_right)
    mismatch = np.linalg.norm(p_left - p_right, axis=1)
    worst = int(np.argmax(mismatch))
    tolerance = SolverConfig.INTERFACE_TOL * domain.diameter
    passed = bool(mismatch[worst] < tolerance)
    if not passed:
        logger.warning("%s: mismatch %.3e at left x̂=%s", face, mismatch[worst], x_left[worst])
    return InterfaceCheck(face, passed, float(mismatch[worst]), tolerance,
                          x_left[worst], x_right[worst])


def _sample_grid(dim: int, samples: int, interior: bool = False) -> np.ndarray:
    if interior:
        axis = (np.arange(samples) + 0.5) / samples
    else:
        axis = np.linspace(0.0, 1.0, samples)
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def check_jacobian_bounds(patch: GeometryPatch, samples: int = SolverConfig.JACOBIAN_SAMPLES,
                          ratio_bound: float = SolverConfig.JACOBIAN_RATIO_BOUND) -> Tuple[float, float]:
    """Sampled c_m <= |det Φ'| <= c_M with c_M/c_m bounded and one orientation sign."""
    points = _sample_grid(patch.dim, samples)
    geo = jacobians(patch, points)
    dets = np.abs(geo.det)
    c_min, c_max = float(dets.min()), float(dets.max())
    if np.any(np.sign(geo.det) != np.sign(geo.det[0])):
        raise DegenerateGeometryError(f"patch {patch.patch_id}: Jacobian changes sign (folded map)")
    if c_max / c_min > ratio_bound:
        raise DegenerateGeometryError(
            f"patch {patch.patch_id}: Jacobian ratio {c_max / c_min:.3e} exceeds {ratio_bound:.3e}")
    if pdist(geo.x).min() <= SolverConfig.DEGENERATE_DET:
        raise DegenerateGeometryError(f"patch {patch.patch_id}: map is not injective on the sample grid")
    return c_min, c_max


def locate_point(patch: GeometryPatch, x: np.ndarray, max_iter: int = 30) -> Optional[np.ndarray]:
    """Parametric pre-image of ``x`` by clipped Newton iteration, or None."""
    xhat = np.full(patch.dim, 0.5)
    scale = max(float(np.linalg.norm(np.ptp(patch.control_points, axis=0))), 1.0)
    for _ in range(max_iter):
        geo = jacobians(patch, xhat.reshape(1, -1))
        residual = geo.x[0] - x
        if np.linalg.norm(residual) < 1e-12 * scale:
            return xhat
        step = np.linalg.solve(geo.matrix[0], residual)
        xhat = np.clip(xhat - step, 0.0, 1.0)
    return None


def check_non_overlap(domain: MultiPatchDomain, samples: int = SolverConfig.OVERLAP_SAMPLES) -> None:
    """Spot-check Ω_i ∩ Ω_j = ∅ by locating interior samples of each patch in the others."""
    interior = _sample_grid(domain.dim, samples, interior=True)
    margin = 1e-8
    for i, j in itertools.permutations(range(domain.num_patches), 2):
        points = map_points(domain.patches[i], interior)
        lo, hi = domain.patches[j].bounding_box()
        for x in points:
            if np.any(x < lo - margin) or np.any(x > hi + margin):
                continue
            xhat = locate_point(domain.patches[j], x)
            if xhat is not None and np.all(xhat > margin) and np.all(xhat < 1.0 - margin):
                raise OverlapError(f"patches {i} and {j} overlap near x = {x.tolist()}")


@dataclass
class DomainCheckReport:
    """Results of :func:`check_domain`."""
    interface_checks: List[InterfaceCheck] = field(default_factory=list)
    jacobian_ranges: List[Tuple[float, float]] = field(default_factory=list)
    quasi_uniformity: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.interface_checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "interfaces": [{"face": str(c.face), "passed": c.passed, "max_mismatch": c.max_mismatch}
                           for c in self.interface_checks],
            "jacobian_ranges": [list(r) for r in self.jacobian_ranges],
            "quasi_uniformity": list(self.quasi_uniformity),
        }


def check_domain(domain: MultiPatchDomain, strict: bool = True) -> DomainCheckReport:
    """Run every load-time geometric check; raise on the first failure when ``strict``."""
    report = DomainCheckReport()
    for patch in domain.patches:
        report.jacobian_ranges.append(check_jacobian_bounds(patch))
    for i, space in enumerate(domain.solution_spaces):
        ratio = space.quasi_uniformity()
        report.quasi_uniformity.append(ratio)
        if not space.is_quasi_uniform():
            logger.warning("patch %d mesh is not quasi-uniform (ratio %.2f)", i, ratio)
    for face in domain.interfaces:
        check = verify_interface(domain, face)
        report.interface_checks.append(check)
        if strict and not check.passed:
            raise InterfaceMismatchError(
                f"{face}: parametrizations differ by {check.max_mismatch:.3e} "
                f"(tolerance {check.tolerance:.3e}) at left x̂ = {check.worst_left.tolist()}",
                check.max_mismatch, check.worst_left)
    check_non_overlap(domain)
    logger.info("domain with %d patches passed geometric checks", domain.num_patches)
    return report
