"""
dgiga - Analysis v1.0
Broken dG and L² error norms, observed convergence rates, predicted rates for
smooth and low-regularity solutions, and the convergence report.
"""

import csv
import io
import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .assembly import DGConfig, DofMap, iterate_elements, iterate_face_cells, penalty_weight
from .errors import ParametricDomainError
from .geometry import MultiPatchDomain, map_points
from .quadrature import axis_quadrature, tensor_rule
from .splines import SplineCoefficients, TensorSplineSpace

logger = logging.getLogger(__name__)

Field_ = Callable[[np.ndarray], np.ndarray]
Coefficients = Union[np.ndarray, Sequence[np.ndarray]]

CSV_COLUMNS = ["s", "h_max", "dofs", "dg_error", "dg_rate", "l2_error", "l2_rate", "predicted_rate"]


def _global_vector(coeffs: Coefficients, dofmap: DofMap) -> np.ndarray:
    if isinstance(coeffs, np.ndarray) and coeffs.ndim == 1:
        vector = coeffs
    else:
        vector = np.concatenate([np.asarray(c, dtype=float).ravel() for c in coeffs])
    if vector.shape[0] != dofmap.total_dofs:
        raise ParametricDomainError(f"coefficient vector has {vector.shape[0]} entries, expected {dofmap.total_dofs}")
    return np.asarray(vector, dtype=float)


def dg_norm_error(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]],
                  coeffs: Coefficients, u_exact: Field_, grad_u_exact: Field_,
                  config: Optional[DGConfig] = None, u_dirichlet: Optional[Field_] = None) -> float:
    """‖u − u_h‖_dG with order-(k+2) quadrature.

    Boundary jumps are taken against ``u_dirichlet`` (the exact solution if omitted).
    """
    config = config or DGConfig()
    spaces = tuple(domain.solution_spaces if spaces is None else spaces)
    dofmap = DofMap.from_spaces(spaces)
    c = _global_vector(coeffs, dofmap)
    n = config.load_points(spaces[0].degree)
    u_dirichlet = u_exact if u_dirichlet is None else u_dirichlet

    total = 0.0
    for i, space in enumerate(spaces):
        ci = c[dofmap.block(i)]
        for el in iterate_elements(domain, i, space, n):
            grad_h = np.einsum("mni,n->mi", el.gradients, ci[el.dofs])
            diff = np.asarray(grad_u_exact(el.x), dtype=float) - grad_h
            total += domain.alpha[i] * float(el.weights @ np.einsum("mi,mi->m", diff, diff))

    h = domain.mesh_sizes(spaces)
    mu = config.penalty(spaces[0].degree, domain.dim)
    for cell in iterate_face_cells(domain, spaces, dofmap, n):
        uh_left = cell.left.values @ c[cell.left.dofs]
        if cell.right is None:
            jump = np.asarray(u_dirichlet(cell.left.x), dtype=float) - uh_left
        else:
            left = np.asarray(u_exact(cell.left.x), dtype=float) - uh_left
            right = np.asarray(u_exact(cell.right.x), dtype=float) - cell.right.values @ c[cell.right.dofs]
            jump = left - right
        total += penalty_weight(cell, domain.alpha, h, mu) * float(cell.weights @ (jump * jump))
    return math.sqrt(max(total, 0.0))


def l2_error(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]],
             coeffs: Coefficients, u_exact: Field_, config: Optional[DGConfig] = None) -> float:
    """Broken L² error over all patches."""
    config = config or DGConfig()
    spaces = tuple(domain.solution_spaces if spaces is None else spaces)
    dofmap = DofMap.from_spaces(spaces)
    c = _global_vector(coeffs, dofmap)
    n = config.load_points(spaces[0].degree)
    total = 0.0
    for i, space in enumerate(spaces):
        ci = c[dofmap.block(i)]
        for el in iterate_elements(domain, i, space, n):
            diff = np.asarray(u_exact(el.x), dtype=float) - el.values @ ci[el.dofs]
            total += float(el.weights @ (diff * diff))
    return math.sqrt(total)


def evaluate_solution(domain: MultiPatchDomain, spaces: Optional[Sequence[TensorSplineSpace]],
                      coeffs: Coefficients, patch: int, xhat: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Physical points and discrete solution values at parametric points of one patch."""
    spaces = tuple(domain.solution_spaces if spaces is None else spaces)
    dofmap = DofMap.from_spaces(spaces)
    c = _global_vector(coeffs, dofmap)
    field_ = SplineCoefficients(spaces[patch], c[dofmap.block(patch)])
    return map_points(domain.patches[patch], xhat), field_.evaluate(xhat)


def parametric_errors(space: TensorSplineSpace, coeffs: SplineCoefficients, f: Field_,
                      grad_f: Optional[Field_] = None, n_per_axis: Optional[int] = None) -> Tuple[float, float]:
    """L² error and H¹ seminorm error of a spline field against f on [0,1]^d."""
    n = n_per_axis or space.degree + 2
    rules = [axis_quadrature(kv, n) for kv in space.axes]
    points, weights = tensor_rule([p for p, _ in rules], [w for _, w in rules])
    diff = np.asarray(f(points), dtype=float) - coeffs.evaluate(points)
    l2 = math.sqrt(float(weights @ (diff * diff)))
    if grad_f is None:
        return l2, float("nan")
    gdiff = np.asarray(grad_f(points), dtype=float) - coeffs.gradient(points)
    return l2, math.sqrt(float(weights @ np.einsum("mi,mi->m", gdiff, gdiff)))


# ─────────────────────────────────────────────────────────────
# Rates
# ─────────────────────────────────────────────────────────────

def observed_rates(errors: Sequence[float]) -> List[float]:
    """log₂(e_{s−1}/e_s) for every refinement step."""
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise ParametricDomainError("at least two errors are needed for a rate")
    if any(not e > 0.0 for e in errors):
        raise ParametricDomainError(f"rates are undefined for non-positive errors: {errors}")
    return [math.log2(a / b) for a, b in zip(errors[:-1], errors[1:])]


def admissible_p_bound(l: float, d: int) -> float:
    """Lower (exclusive) bound 2d/(d+2(l−1)) on the integrability exponent p."""
    return 2.0 * d / (d + 2.0 * (l - 1.0))


def predicted_rate(k: int, l: float, p: float, d: int) -> float:
    """dG-norm convergence rate for u ∈ W^{l,p} with degree-k splines.

    l_eff = min(l, k+1); the rate is l_eff − 1 for p = 2 and
    l_eff + d/2 − d/p − 1 for p < 2.
    """
    if k < 1:
        raise ParametricDomainError(f"degree must be at least 1, got {k}")
    if l < 2:
        raise ParametricDomainError(f"regularity l must be at least 2, got {l}")
    if not admissible_p_bound(l, d) < p <= 2.0:
        raise ParametricDomainError(
            f"p={p} outside the admissible interval ({admissible_p_bound(l, d):.4f}, 2] for l={l}, d={d}")
    l_eff = min(l, k + 1)
    if p == 2.0:
        return float(l_eff - 1)
    return float(l_eff + d / 2.0 - d / p - 1.0)


# ─────────────────────────────────────────────────────────────
# Reports
# ─────────────────────────────────────────────────────────────

@dataclass
class ErrorRecord:
    """Errors measured at one refinement level s."""
    level: int
    h_max: float
    dofs: int
    dg_error: float
    l2_error: float
    mesh_ratio: float = 1.0
    iterations: int = 0


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.17g}"


_FLOAT_MARK = "\u0000f17:"
_FLOAT_TOKEN = re.compile(r'"\\u0000f17:([^"]+)"')


def _mark_floats(value):
    """Finite floats become 17-digit markers for :meth:`ConvergenceReport.to_json`; NaN and inf become None."""
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        text = f"{value:.17g}"
        return _FLOAT_MARK + (text if any(c in text for c in ".e") else text + ".0")
    if isinstance(value, dict):
        return {key: _mark_floats(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_mark_floats(item) for item in value]
    return value


def _rates(errors: List[float]) -> List[float]:
    """Observed rates, NaN where an error vanished."""
    return [math.log2(a / b) if a > 0.0 and b > 0.0 else float("nan")
            for a, b in zip(errors[:-1], errors[1:])]


@dataclass
class ConvergenceReport:
    """Errors and rates over a refinement study."""
    problem: str
    degree: int
    scheme: str
    records: List[ErrorRecord] = field(default_factory=list)
    predicted_rate: Optional[float] = None
    complete: bool = True
    message: str = ""

    @property
    def dg_rates(self) -> List[float]:
        return _rates([r.dg_error for r in self.records])

    @property
    def l2_rates(self) -> List[float]:
        return _rates([r.l2_error for r in self.records])

    @property
    def final_dg_rate(self) -> Optional[float]:
        rates = self.dg_rates
        return rates[-1] if rates else None

    def to_rows(self) -> List[dict]:
        """One dict per level with the CSV columns; rate cells are None at s=0."""
        dg, l2 = self.dg_rates, self.l2_rates
        rows = []
        for i, r in enumerate(self.records):
            rows.append({
                "s": r.level,
                "h_max": r.h_max,
                "dofs": r.dofs,
                "dg_error": r.dg_error,
                "dg_rate": dg[i - 1] if i > 0 else None,
                "l2_error": r.l2_error,
                "l2_rate": l2[i - 1] if i > 0 else None,
                "predicted_rate": self.predicted_rate if i > 0 else None,
            })
        return rows

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in self.to_rows():
            writer.writerow([
                row["s"], _fmt(row["h_max"]), row["dofs"], _fmt(row["dg_error"]), _fmt(row["dg_rate"]),
                _fmt(row["l2_error"]), _fmt(row["l2_rate"]), _fmt(row["predicted_rate"]),
            ])
        return buffer.getvalue()

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "degree": self.degree,
            "scheme": self.scheme,
            "predicted_rate": self.predicted_rate,
            "complete": self.complete,
            "message": self.message,
            "rows": self.to_rows(),
            "records": [asdict(r) for r in self.records],
        }

    def to_json(self) -> str:
        """JSON with floats at 17 significant digits; undefined rates are null."""
        text = json.dumps(_mark_floats(self.to_dict()), indent=2)
        return _FLOAT_TOKEN.sub(r"\1", text)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        data = json.loads(text)
        return cls(
            problem=data["problem"],
            degree=int(data["degree"]),
            scheme=data["scheme"],
            records=[ErrorRecord(**r) for r in data["records"]],
            predicted_rate=data.get("predicted_rate"),
            complete=bool(data.get("complete", True)),
            message=data.get("message", ""),
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ConvergenceReport":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def to_table(self) -> str:
        """Generate markdown rate table."""
        headers = ["s", "h_max", "dofs", "dG error", "dG rate", "L2 error", "L2 rate"]
        table = "| " + " | ".join(headers) + " |\n"
        table += "|" + "|".join(["---"] * len(headers)) + "|\n"
        for row in self.to_rows():
            cells = [
                str(row["s"]),
                f"{row['h_max']:.4g}",
                str(row["dofs"]),
                f"{row['dg_error']:.3e}",
                "-" if row["dg_rate"] is None else f"{row['dg_rate']:.2f}",
                f"{row['l2_error']:.3e}",
                "-" if row["l2_rate"] is None else f"{row['l2_rate']:.2f}",
            ]
            table += "| " + " | ".join(cells) + " |\n"
        if self.predicted_rate is not None:
            table += f"\nPredicted dG rate: {self.predicted_rate:.4f}\n"
        if not self.complete:
            table += f"\nINCOMPLETE: {self.message}\n"
        return table
