"""
dgiga - Quadrature v1.0
Gauss-Legendre rules on micro-elements and faces, and the merged segmentation
of non-matching interfaces into cells lying in exactly one element per side.
"""

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .config import SolverConfig
from .errors import ParametricDomainError
from .geometry import BoundaryFace, InterfaceFace
from .splines import KnotVector, TensorSplineSpace


@dataclass(frozen=True)
class QuadratureRule:
    """Rule on the reference interval [0,1]; weights sum to 1."""
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.points)


@lru_cache(maxsize=None)
def gauss_rule(n: int) -> QuadratureRule:
    """n-point Gauss-Legendre rule on [0,1], exact up to degree 2n-1."""
    if not 1 <= n <= SolverConfig.MAX_GAUSS_POINTS:
        raise ParametricDomainError(f"Gauss rule size must be in 1..{SolverConfig.MAX_GAUSS_POINTS}, got {n}")
    x, w = leggauss(n)
    points = 0.5 * (x + 1.0)
    weights = 0.5 * w
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points, weights)


def axis_quadrature(kv: KnotVector, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Iterated rule over all knot spans of one axis, span-major."""
    rule = gauss_rule(n)
    bp = kv.breakpoints
    a, h = bp[:-1, None], np.diff(bp)[:, None]
    return (a + h * rule.points).ravel(), (h * rule.weights).ravel()


def tensor_rule(axis_points: Sequence[np.ndarray], axis_weights: Sequence[np.ndarray]):
    grids = np.meshgrid(*axis_points, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(points.shape[0])
    for g in np.meshgrid(*axis_weights, indexing="ij"):
        weights = weights * g.ravel()
    return points, weights


@dataclass(frozen=True)
class ElementQuadrature:
    """Tensor Gauss rule on one parametric micro-element (C-ordered points)."""
    index: Tuple[int, ...]
    points: np.ndarray
    weights: np.ndarray
    axis_points: Tuple[np.ndarray, ...]
    axis_weights: Tuple[np.ndarray, ...]


def element_quadrature(space: TensorSplineSpace, element_index: Sequence[int],
                       n_per_axis: int) -> ElementQuadrature:
    """n^d Gauss points inside Ê_m with weights summing to |Ê_m|."""
    lower, upper = space.element_bounds(tuple(element_index))
    rule = gauss_rule(n_per_axis)
    axis_points = tuple(lo + (hi - lo) * rule.points for lo, hi in zip(lower, upper))
    axis_weights = tuple((hi - lo) * rule.weights for lo, hi in zip(lower, upper))
    points, weights = tensor_rule(axis_points, axis_weights)
    return ElementQuadrature(tuple(element_index), points, weights, axis_points, axis_weights)


# ─────────────────────────────────────────────────────────────
# Face segmentation
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class FaceCell:
    """Box in left-face coordinates inside one element per side."""
    lower: np.ndarray
    upper: np.ndarray
    left_element: Tuple[int, ...]
    right_element: Optional[Tuple[int, ...]] = None

    @property
    def measure(self) -> float:
        return float(np.prod(self.upper - self.lower))


@dataclass(frozen=True)
class InterfaceSegmentation:
    """Cells partitioning a face; boundary faces have no right side."""
    face: Union[InterfaceFace, BoundaryFace]
    cells: Tuple[FaceCell, ...]
    breakpoints: Tuple[np.ndarray, ...]
    left_space: TensorSplineSpace
    right_space: Optional[TensorSplineSpace] = None

    @property
    def dim(self) -> int:
        return self.left_space.dim

    @property
    def measure(self) -> float:
        return sum(c.measure for c in self.cells)

    @property
    def is_interface(self) -> bool:
        return isinstance(self.face, InterfaceFace)


def _merge_breakpoints(*sets: np.ndarray) -> np.ndarray:
    merged = np.sort(np.concatenate(sets))
    keep = np.concatenate(([True], np.diff(merged) > SolverConfig.BREAKPOINT_TOL))
    merged = merged[keep]
    merged[0], merged[-1] = 0.0, 1.0
    return merged


def _cells(breakpoints: Sequence[np.ndarray]):
    for idx in itertools.product(*[range(len(b) - 1) for b in breakpoints]):
        lower = np.array([b[i] for b, i in zip(breakpoints, idx)])
        upper = np.array([b[i + 1] for b, i in zip(breakpoints, idx)])
        yield lower, upper


def merge_interface(face: InterfaceFace, left_space: TensorSplineSpace,
                    right_space: TensorSplineSpace) -> InterfaceSegmentation:
    """Union of both sides' face-trace breakpoints, expressed in left-face coordinates."""
    dim = left_space.dim
    left_axes = face.left_face.free_axes(dim)
    right_axes = face.right_face.free_axes(dim)
    breakpoints = []
    for m, (p, flip) in enumerate(zip(face.permutation, face.flips)):
        left_bp = left_space.axes[left_axes[m]].breakpoints
        right_bp = right_space.axes[right_axes[p]].breakpoints
        if flip:
            right_bp = 1.0 - right_bp[::-1]
        breakpoints.append(_merge_breakpoints(left_bp, right_bp))

    cells = []
    for lower, upper in _cells(breakpoints):
        mid = 0.5 * (lower + upper).reshape(1, -1)
        x_left = face.left_face.to_volume(mid, dim)[0]
        x_right = face.right_face.to_volume(face.map_to_right(mid), dim)[0]
        cells.append(FaceCell(lower, upper, left_space.element_of(x_left), right_space.element_of(x_right)))
    return InterfaceSegmentation(face, tuple(cells), tuple(breakpoints), left_space, right_space)


def boundary_segmentation(face: BoundaryFace, space: TensorSplineSpace) -> InterfaceSegmentation:
    """Trace mesh of one patch on a boundary face."""
    dim = space.dim
    breakpoints = [space.axes[a].breakpoints for a in face.face.free_axes(dim)]
    cells = []
    for lower, upper in _cells(breakpoints):
        mid = 0.5 * (lower + upper).reshape(1, -1)
        cells.append(FaceCell(lower, upper, space.element_of(face.face.to_volume(mid, dim)[0])))
    return InterfaceSegmentation(face, tuple(cells), tuple(breakpoints), space)


@dataclass(frozen=True)
class FaceQuadrature:
    """Face points in both sides' volumetric parametric coordinates.

    Points are grouped by cell: ``cell_slices[c]`` selects the points of cell c.
    Weights carry the parametric cell measure only.
    """
    segmentation: InterfaceSegmentation
    left_points: np.ndarray
    right_points: Optional[np.ndarray]
    weights: np.ndarray
    cell_slices: Tuple[slice, ...]


def face_quadrature(seg: InterfaceSegmentation, n_per_axis: int) -> FaceQuadrature:
    """Tensor Gauss rule on every cell of a segmentation."""
    dim = seg.dim
    rule = gauss_rule(n_per_axis)
    face = seg.face
    left_sel = face.left_face if seg.is_interface else face.face

    left, right, weights, slices = [], [], [], []
    start = 0
    for cell in seg.cells:
        axis_points = [lo + (hi - lo) * rule.points for lo, hi in zip(cell.lower, cell.upper)]
        axis_weights = [(hi - lo) * rule.weights for lo, hi in zip(cell.lower, cell.upper)]
        t, w = tensor_rule(axis_points, axis_weights)
        left.append(left_sel.to_volume(t, dim))
        if seg.is_interface:
            right.append(face.right_face.to_volume(face.map_to_right(t), dim))
        weights.append(w)
        slices.append(slice(start, start + len(w)))
        start += len(w)

    return FaceQuadrature(
        seg,
        np.vstack(left),
        np.vstack(right) if right else None,
        np.concatenate(weights),
        tuple(slices),
    )


def segment_all(domain, spaces: Sequence[TensorSplineSpace]) -> List[InterfaceSegmentation]:
    """Segmentations of every interface followed by every boundary face, in domain order."""
    segs = [merge_interface(f, spaces[f.left_patch], spaces[f.right_patch]) for f in domain.interfaces]
    segs += [boundary_segmentation(b, spaces[b.patch]) for b in domain.boundary_faces]
    return segs
