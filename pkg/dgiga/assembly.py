"""
dgiga - dG Assembly v1.0
Volume, interface-flux, penalty and load contributions of the interior-penalty
dG-IgA discretization, in symmetric (SIP) and incomplete (IIP) variants.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field

from .config import SolverConfig
from .errors import ContractError
from .geometry import MultiPatchDomain, evaluate_geometry, normals_from_geometry
from .quadrature import (
    FaceQuadrature,
    axis_quadrature,
    face_quadrature,
    segment_all,
)
from .splines import TensorSplineSpace, eval_tensor_basis_batch, eval_tensor_basis_grid, tabulate_axes

logger = logging.getLogger(__name__)

Field_ = Callable[[np.ndarray], np.ndarray]


class Scheme(str, Enum):
    """Interior-penalty variant."""
    SIP = "sip"
    IIP = "iip"


class DGConfig(BaseModel):
    """Discretization parameters shared by assembly and error norms."""

    model_config = ConfigDict(frozen=True)

    scheme: Scheme = Scheme.SIP
    mu: Optional[float] = Field(default=None, gt=0.0)
    quadrature_order: Optional[int] = Field(default=None, ge=1, le=SolverConfig.MAX_GAUSS_POINTS - 1)
    workers: int = Field(default_factory=lambda: SolverConfig.WORKERS, ge=1)

    def penalty(self, degree: int, dim: int) -> float:
        """μ, falling back to the degree-dependent default."""
        return self.mu if self.mu is not None else SolverConfig.default_mu(degree, dim)

    def form_points(self, degree: int) -> int:
        if self.quadrature_order is not None:
            return self.quadrature_order
        return SolverConfig.quadrature_points(degree, "form")

    def load_points(self, degree: int) -> int:
        if self.quadrature_order is not None:
            return self.quadrature_order + 1
        return SolverConfig.quadrature_points(degree, "load")


@dataclass(frozen=True)
class DofMap:
    """Contiguous, disjoint global index block per patch."""
    offsets: Tuple[int, ...]
    sizes: Tuple[int, ...]

    @classmethod
    def from_spaces(cls, spaces: Sequence[TensorSplineSpace]) -> "DofMap":
        sizes = tuple(s.num_basis for s in spaces)
        offsets = tuple(int(o) for o in np.concatenate(([0], np.cumsum(sizes)[:-1])))
        return cls(offsets, sizes)

    @property
    def total_dofs(self) -> int:
        return sum(self.sizes)

    @property
    def num_patches(self) -> int:
        return len(self.sizes)

    def block(self, patch: int) -> slice:
        return slice(self.offsets[patch], self.offsets[patch] + self.sizes[patch])

    def split(self, vector: np.ndarray) -> List[np.ndarray]:
        """Per-patch views of a global coefficient vector."""
        return [vector[self.block(i)] for i in range(self.num_patches)]


@dataclass
class DGSystem:
    """Sparse matrix (CSR, sorted indices) and right-hand side."""
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dofmap: DofMap

    def __add__(self, other: "DGSystem") -> "DGSystem":
        if other.dofmap != self.dofmap:
            raise ContractError("cannot add systems with different dof maps")
        matrix = (self.matrix + other.matrix).tocsr()
        matrix.sort_indices()
        return DGSystem(matrix, self.rhs + other.rhs, self.dofmap)

    @property
    def num_dofs(self) -> int:
        return self.dofmap.total_dofs

    def symmetry_defect(self) -> float:
        """‖A − Aᵀ‖_F / ‖A‖_F."""
        norm = spla.norm(self.matrix)
        if norm == 0.0:
            return 0.0
        return float(spla.norm(self.matrix - self.matrix.T) / norm)

    def energy(self, v: np.ndarray) -> float:
        return float(v @ (self.matrix @ v))

    def residual(self, u: np.ndarray) -> np.ndarray:
        return self.rhs - self.matrix @ u


class _Triplets:
    """COO accumulation buffer; blocks are kept in insertion order."""

    def __init__(self):
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []

    def add(self, rows: np.ndarray, cols: np.ndarray, block: np.ndarray) -> None:
        r, c = np.meshgrid(rows, cols, indexing="ij")
        self.rows.append(r.ravel())
        self.cols.append(c.ravel())
        self.vals.append(np.asarray(block, dtype=float).ravel())

    def extend(self, other: "_Triplets") -> None:
        self.rows += other.rows
        self.cols += other.cols
        self.vals += other.vals

    def to_csr(self, n: int) -> sp.csr_matrix:
        if not self.vals:
            return sp.csr_matrix((n, n))
        coo = sp.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=(n, n),
        )
        matrix = coo.tocsr()
        matrix.sum_duplicates()
        matrix.sort_indices()
        return matrix


def _spaces(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]]):
    spaces = tuple(domain.solution_spaces if spaces is None else spaces)
    if len(spaces) != domain.num_patches:
        raise ContractError(f"expected {domain.num_patches} solution spaces, got {len(spaces)}")
    return spaces


def _ordered_map(fn, items: Iterable, workers: int) -> list:
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ─────────────────────────────────────────────────────────────
# Element loop
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ElementData:
    """Basis functions, physical gradients and integration weights on one micro-element."""
    index: Tuple[int, ...]
    dofs: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    x: np.ndarray
    weights: np.ndarray


def iterate_elements(domain: MultiPatchDomain, patch: int, space: TensorSplineSpace,
                     n_per_axis: int):
    """Yield :class:`ElementData` for every micro-element of ``space`` in C order.

    ``weights`` already include |det J|; ``dofs`` are local to the patch.
    """
    geo_patch = domain.patches[patch]
    rules = [axis_quadrature(kv, n_per_axis) for kv in space.axes]
    axis_points = [p for p, _ in rules]
    sol_tabs = tabulate_axes(space, axis_points, 1)
    geo_tabs = tabulate_axes(geo_patch.space, axis_points, 1)

    for index in np.ndindex(*space.num_elements):
        cut = [slice(e * n_per_axis, (e + 1) * n_per_axis) for e in index]
        basis = eval_tensor_basis_grid(space, [(f[s], t[s]) for (f, t), s in zip(sol_tabs, cut)], 1)
        geo = evaluate_geometry(
            geo_patch, eval_tensor_basis_grid(geo_patch.space, [(f[s], t[s]) for (f, t), s in zip(geo_tabs, cut)], 1))
        weights = np.ones(len(geo.det))
        for g in np.meshgrid(*[w[s] for (_, w), s in zip(rules, cut)], indexing="ij"):
            weights = weights * g.ravel()
        gradients = np.einsum("mij,mnj->mni", geo.inv_transpose, basis.gradients)
        yield ElementData(index, basis.indices[0], basis.values, gradients, geo.x,
                          weights * np.abs(geo.det))


def _volume_patch(domain: MultiPatchDomain, spaces, config: DGConfig, dofmap: DofMap,
                  patch: int) -> _Triplets:
    buf = _Triplets()
    space = spaces[patch]
    alpha = domain.alpha[patch]
    offset = dofmap.offsets[patch]
    for el in iterate_elements(domain, patch, space, config.form_points(space.degree)):
        local = alpha * np.einsum("m,mai,mbi->ab", el.weights, el.gradients, el.gradients)
        dofs = el.dofs + offset
        buf.add(dofs, dofs, local)
    return buf


def assemble_volume(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
                    config: Optional[DGConfig] = None) -> DGSystem:
    """Σᵢ α⁽ⁱ⁾ ∫_{Ωᵢ} ∇u·∇φ, one block per patch."""
    config = config or DGConfig()
    spaces = _spaces(domain, spaces)
    dofmap = DofMap.from_spaces(spaces)
    buffers = _ordered_map(lambda i: _volume_patch(domain, spaces, config, dofmap, i),
                           range(domain.num_patches), config.workers)
    total = _Triplets()
    for buf in buffers:
        total.extend(buf)
    return DGSystem(total.to_csr(dofmap.total_dofs), np.zeros(dofmap.total_dofs), dofmap)


# ─────────────────────────────────────────────────────────────
# Face terms
# ─────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class TraceData:
    """One side's trace on a face cell: dofs (global), values (m,n), gradients (m,n,d)."""
    dofs: np.ndarray
    values: np.ndarray
    gradients: np.ndarray
    x: np.ndarray


@dataclass(frozen=True)
class FaceCellData:
    """Everything the face forms need on one cell.

    ``normals`` point out of the left patch; ``weights`` include the surface factor.
    """
    left: TraceData
    right: Optional[TraceData]
    normals: np.ndarray
    weights: np.ndarray
    left_patch: int
    right_patch: Optional[int]


def _trace(domain: MultiPatchDomain, space: TensorSplineSpace, patch: int, points: np.ndarray,
           offset: int, selector=None):
    geo_patch = domain.patches[patch]
    basis = eval_tensor_basis_batch(space, points, 1)
    geo = evaluate_geometry(geo_patch, eval_tensor_basis_batch(geo_patch.space, points, 1))
    gradients = np.einsum("mij,mnj->mni", geo.inv_transpose, basis.gradients)
    trace = TraceData(basis.indices[0] + offset, basis.values, gradients, geo.x)
    if selector is None:
        return trace
    normals, factors = normals_from_geometry(geo, selector)
    return trace, normals, factors


def iterate_face_cells(domain: MultiPatchDomain, spaces: Sequence[TensorSplineSpace],
                       dofmap: DofMap, n_per_axis: int, interfaces: bool = True):
    """Yield :class:`FaceCellData` for every cell of every interface, then every boundary face."""
    for seg in segment_all(domain, spaces):
        if seg.is_interface and not interfaces:
            continue
        fq: FaceQuadrature = face_quadrature(seg, n_per_axis)
        face = seg.face
        if seg.is_interface:
            lp, rp, selector = face.left_patch, face.right_patch, face.left_face
        else:
            lp, rp, selector = face.patch, None, face.face
        for cut in fq.cell_slices:
            left, normals, factors = _trace(domain, spaces[lp], lp, fq.left_points[cut],
                                            dofmap.offsets[lp], selector)
            right = None
            if rp is not None:
                right = _trace(domain, spaces[rp], rp, fq.right_points[cut], dofmap.offsets[rp])
            yield FaceCellData(left, right, normals, fq.weights[cut] * factors, lp, rp)


def _jump_and_flux(cell: FaceCellData, alpha: Sequence[float]):
    """Jump ⟦B⟧ and normal flux {α∇B}·n of every local basis function, (m, n_local)."""
    n = cell.normals
    flux_left = alpha[cell.left_patch] * np.einsum("mni,mi->mn", cell.left.gradients, n)
    if cell.right is None:
        return cell.left.dofs, cell.left.values, flux_left
    flux_right = alpha[cell.right_patch] * np.einsum("mni,mi->mn", cell.right.gradients, n)
    dofs = np.concatenate((cell.left.dofs, cell.right.dofs))
    jump = np.hstack((cell.left.values, -cell.right.values))
    flux = 0.5 * np.hstack((flux_left, flux_right))
    return dofs, jump, flux


def penalty_weight(cell: FaceCellData, alpha: Sequence[float], h: Sequence[float], mu: float) -> float:
    sigma = mu * alpha[cell.left_patch] / h[cell.left_patch]
    if cell.right_patch is not None:
        sigma += mu * alpha[cell.right_patch] / h[cell.right_patch]
    return sigma


def _assemble_faces(domain: MultiPatchDomain, spaces, config: DGConfig,
                    consistency: bool, penalty: bool) -> DGSystem:
    dofmap = DofMap.from_spaces(spaces)
    h = domain.mesh_sizes(spaces)
    mu = config.penalty(spaces[0].degree, domain.dim)
    buf = _Triplets()
    for cell in iterate_face_cells(domain, spaces, dofmap, config.form_points(spaces[0].degree)):
        dofs, jump, flux = _jump_and_flux(cell, domain.alpha)
        w = cell.weights
        if consistency:
            # rows test functions, columns trial functions
            block = -np.einsum("m,ma,mb->ab", w, jump, flux)
            if config.scheme == Scheme.SIP:
                block = block + block.T
            buf.add(dofs, dofs, block)
        if penalty:
            sigma = penalty_weight(cell, domain.alpha, h, mu)
            buf.add(dofs, dofs, sigma * np.einsum("m,ma,mb->ab", w, jump, jump))
    return DGSystem(buf.to_csr(dofmap.total_dofs), np.zeros(dofmap.total_dofs), dofmap)


def assemble_interface(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
                       config: Optional[DGConfig] = None) -> DGSystem:
    """Consistency terms −∫{α∇u}·n⟦φ⟧ (plus the transposed term for SIP) on all faces.

    Boundary faces use the single trace: {α∇u} = α∇u and ⟦φ⟧ = φ.
    """
    config = config or DGConfig()
    return _assemble_faces(domain, _spaces(domain, spaces), config, consistency=True, penalty=False)


def assemble_penalty(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
                     config: Optional[DGConfig] = None) -> DGSystem:
    """Σ_F (μα⁽ⁱ⁾/h_i + μα⁽ʲ⁾/h_j) ∫_F ⟦u⟧⟦φ⟧; boundary faces carry the left weight only."""
    config = config or DGConfig()
    return _assemble_faces(domain, _spaces(domain, spaces), config, consistency=False, penalty=True)


def assemble_rhs(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
                 config: Optional[DGConfig] = None, f: Optional[Field_] = None,
                 u_D: Optional[Field_] = None) -> np.ndarray:
    """Load ∫fφ plus the weak Dirichlet terms.

    Boundary penalty ∫ (μα/h) u_D φ always; for SIP also −∫ α∇φ·n u_D.
    Missing ``f`` or ``u_D`` is treated as zero.
    """
    config = config or DGConfig()
    spaces = _spaces(domain, spaces)
    dofmap = DofMap.from_spaces(spaces)
    rhs = np.zeros(dofmap.total_dofs)
    degree = spaces[0].degree
    n = config.load_points(degree)

    if f is not None:
        for i, space in enumerate(spaces):
            offset = dofmap.offsets[i]
            for el in iterate_elements(domain, i, space, n):
                fx = np.asarray(f(el.x), dtype=float).reshape(-1)
                np.add.at(rhs, el.dofs + offset, el.values.T @ (el.weights * fx))

    if u_D is not None and domain.boundary_faces:
        h = domain.mesh_sizes(spaces)
        mu = config.penalty(degree, domain.dim)
        for cell in iterate_face_cells(domain, spaces, dofmap, n, interfaces=False):
            g = np.asarray(u_D(cell.left.x), dtype=float).reshape(-1) * cell.weights
            sigma = penalty_weight(cell, domain.alpha, h, mu)
            contribution = sigma * (cell.left.values.T @ g)
            if config.scheme == Scheme.SIP:
                flux = domain.alpha[cell.left_patch] * np.einsum("mni,mi->mn", cell.left.gradients, cell.normals)
                contribution = contribution - flux.T @ g
            np.add.at(rhs, cell.left.dofs, contribution)
    return rhs


def assemble(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
             config: Optional[DGConfig] = None, f: Optional[Field_] = None,
             u_D: Optional[Field_] = None) -> DGSystem:
    """Full system a_h(u,φ) = l(φ) + p_D(u_D,φ)."""
    config = config or DGConfig()
    spaces = _spaces(domain, spaces)
    system = assemble_volume(domain, spaces, config) + _assemble_faces(
        domain, spaces, config, consistency=True, penalty=True)
    system.rhs = assemble_rhs(domain, spaces, config, f, u_D)

    if config.scheme == Scheme.SIP:
        defect = system.symmetry_defect()
        if defect > SolverConfig.SIP_SYMMETRY_TOL:
            raise ContractError(f"SIP matrix is not symmetric (relative defect {defect:.3e})")
    logger.info("assembled %s system: %d dofs, %d nonzeros",
                config.scheme.value.upper(), system.num_dofs, system.matrix.nnz)
    return system


# ─────────────────────────────────────────────────────────────
# dG norm and coercivity
# ─────────────────────────────────────────────────────────────

def dg_norm_matrix(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]] = None,
                   config: Optional[DGConfig] = None) -> sp.csr_matrix:
    """Matrix N with vᵀNv = ‖v_h‖²_dG (volume plus penalty forms)."""
    config = config or DGConfig()
    spaces = _spaces(domain, spaces)
    return (assemble_volume(domain, spaces, config) + assemble_penalty(domain, spaces, config)).matrix


@dataclass(frozen=True)
class CoercivityProbe:
    samples: int
    min_energy: float
    min_ratio: float

    @property
    def passed(self) -> bool:
        return self.min_energy > 0.0


def coercivity_probe(system, norm_matrix: sp.spmatrix,
                     samples: int = SolverConfig.COERCIVITY_PROBE_SAMPLES,
                     seed: int = SolverConfig.COERCIVITY_PROBE_SEED) -> CoercivityProbe:
    """Random-vector check of vᵀAv > 0 and of the ratio vᵀAv / vᵀNv."""
    matrix = system.matrix if isinstance(system, DGSystem) else system
    rng = np.random.default_rng(seed)
    energies, ratios = [], []
    for _ in range(samples):
        v = rng.standard_normal(matrix.shape[0])
        energy = float(v @ (matrix @ v))
        norm2 = float(v @ (norm_matrix @ v))
        energies.append(energy)
        ratios.append(energy / norm2 if norm2 > 0.0 else np.inf)
    probe = CoercivityProbe(samples, min(energies), min(ratios))
    if not probe.passed:
        logger.warning("coercivity probe: vᵀAv = %.3e ≤ 0 for a random vector; increase mu",
                       probe.min_energy)
    else:
        logger.debug("coercivity probe: min vᵀAv/‖v‖²_dG = %.4f over %d samples",
                     probe.min_ratio, samples)
    return probe
