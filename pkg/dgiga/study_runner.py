"""
dgiga - Study Runner v1.0
Refinement-study driver: assemble, solve and measure errors on successive
dyadic refinements, then emit the convergence report.
"""

import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .analysis import ConvergenceReport, ErrorRecord, dg_norm_error, evaluate_solution, l2_error
from .assembly import DGConfig, Scheme, assemble, coercivity_probe, dg_norm_matrix
from .errors import ConfigError, DGIGAError, ParametricDomainError, SolverError
from .geometry import MultiPatchDomain, refine_dyadic
from .domain_loader import StudyConfig, load_config
from .problems import ProblemSpec, get_problem
from .solver import SolveReport, solve_general, solve_spd

logger = logging.getLogger(__name__)


@dataclass
class LevelResult:
    """Discrete solution and measurements at one refinement level."""
    domain: MultiPatchDomain
    coefficients: np.ndarray
    record: ErrorRecord
    solve: SolveReport


def prepare_domain(problem: ProblemSpec, domain: MultiPatchDomain, degree: int) -> MultiPatchDomain:
    """Apply the problem's α and the study degree to a loaded domain."""
    if domain.dim != problem.dim:
        raise ConfigError(f"problem '{problem.name}' is {problem.dim}D but the domain is {domain.dim}D")
    if problem.alpha is not None:
        domain = dataclasses.replace(domain, alpha=tuple(problem.alpha))
    if domain.degree != degree:
        domain = domain.with_degree(degree)
    return domain


class StudyRunner:
    """
    Runs a convergence study level by level.

    SIP systems are solved with preconditioned CG, falling back to BiCGStab if CG
    fails; IIP systems go straight to BiCGStab. A solver failure stops the study
    and the report is flagged incomplete.
    """

    def __init__(self, verbose: bool = True, probe_coercivity: bool = True):
        self.verbose = verbose
        self.probe_coercivity = probe_coercivity
        self.levels: List[LevelResult] = []

    def _log(self, message: str) -> None:
        if self.verbose:
            print(message)
        logger.info(message.strip())

    def solve(self, system, scheme: Scheme, tol: float) -> Tuple[np.ndarray, SolveReport]:
        if scheme == Scheme.SIP:
            try:
                return solve_spd(system, tol=tol)
            except SolverError as exc:
                logger.warning("CG failed (%s); retrying with BiCGStab", exc)
        return solve_general(system, tol=tol)

    def run_level(self, level: int, domain: MultiPatchDomain, problem: ProblemSpec,
                  config: DGConfig, tol: float) -> LevelResult:
        start = time.perf_counter()
        system = assemble(domain, domain.solution_spaces, config, problem.source, problem.dirichlet)
        if level == 0 and self.probe_coercivity and config.scheme == Scheme.SIP:
            coercivity_probe(system, dg_norm_matrix(domain, domain.solution_spaces, config))
        coefficients, report = self.solve(system, config.scheme, tol)
        dg = dg_norm_error(domain, domain.solution_spaces, coefficients, problem.exact, problem.gradient,
                           config, problem.dirichlet)
        l2 = l2_error(domain, domain.solution_spaces, coefficients, problem.exact, config)
        record = ErrorRecord(level, domain.h_max, domain.num_dofs, dg, l2,
                             domain.interface_mesh_ratio(), report.iterations)
        self._log(f"  s={level}: dofs={record.dofs:<7d} dG error={dg:.4e}  L2 error={l2:.4e}  "
                  f"iters={report.iterations} ({time.perf_counter() - start:.1f}s)")
        return LevelResult(domain, coefficients, record, report)

    def run_study(self, study: StudyConfig, domain: Optional[MultiPatchDomain] = None,
                  problem: Optional[ProblemSpec] = None) -> ConvergenceReport:
        """
        Run S refinement levels of one study.

        Args:
            study: study settings
            domain: base domain; loaded from the study's (or the problem's bundled) config if omitted
            problem: problem data; built from the registry if omitted
        """
        problem = problem or get_problem(study.problem, **study.problem_params)
        if domain is None:
            source = study.config_path or problem.config_name
            if source is None:
                raise ConfigError(f"problem '{problem.name}' has no bundled configuration; pass one")
            _, domain = load_config(source, {"degree": study.degree})
        domain = prepare_domain(problem, domain, study.degree)
        config = study.dg_config()

        try:
            predicted = problem.predicted_rate(study.degree)
        except ParametricDomainError:
            predicted = None
        report = ConvergenceReport(problem.name, study.degree, study.scheme.value, predicted_rate=predicted)

        self._log("\n" + "=" * 80)
        self._log(f"STUDY: {problem.description} | k={study.degree} | {study.scheme.value.upper()} "
                  f"| S={study.levels} | {domain.num_patches} patches")
        self._log("=" * 80)

        self.levels = []
        for level in range(study.levels):
            try:
                result = self.run_level(level, domain, problem, config, study.tol)
            except SolverError as exc:
                report.complete = False
                report.message = f"solver failure at level {level}: {exc}"
                logger.error(report.message)
                break
            self.levels.append(result)
            report.records.append(result.record)
            if level + 1 < study.levels:
                domain = refine_dyadic(domain)

        if self.verbose:
            print()
            print(report.to_table())
        return report

    @property
    def final(self) -> Optional[LevelResult]:
        return self.levels[-1] if self.levels else None


def run_study(study: StudyConfig, domain: Optional[MultiPatchDomain] = None,
              verbose: bool = False) -> ConvergenceReport:
    """Run one refinement study and return its report."""
    return StudyRunner(verbose=verbose).run_study(study, domain)


# ─────────────────────────────────────────────────────────────
# Output
# ─────────────────────────────────────────────────────────────

def _write(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc}") from exc
    return path


def emit_report(report: ConvergenceReport, path: Union[str, Path], fmt: str = "csv") -> Path:
    """Write the report as CSV or JSON."""
    if fmt == "csv":
        return _write(path, report.to_csv())
    if fmt == "json":
        return _write(path, report.to_json())
    raise ConfigError(f"unknown report format '{fmt}' (use csv or json)")


def save_coefficients(path: Union[str, Path], coefficients: np.ndarray, study: StudyConfig, level: int) -> Path:
    """Store a solution vector with what is needed to rebuild its spaces."""
    payload = {
        "config": study.config_path,
        "problem": study.problem,
        "degree": study.degree,
        "level": level,
        "coefficients": [float(c) for c in coefficients],
    }
    return _write(path, json.dumps(payload))


def load_coefficients(path: Union[str, Path]) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read coefficients from {path}: {exc}") from exc
    data["coefficients"] = np.asarray(data["coefficients"], dtype=float)
    return data


def refine_to(domain: MultiPatchDomain, level: int) -> MultiPatchDomain:
    for _ in range(level):
        domain = refine_dyadic(domain)
    return domain


def sample_solution(domain: MultiPatchDomain, coefficients: np.ndarray, grid: int) -> np.ndarray:
    """Rows (x..., value) on an N^d parametric grid of every patch, mapped to physical space."""
    if grid < 2:
        raise ParametricDomainError(f"sample grid needs at least 2 points per axis, got {grid}")
    if len(coefficients) != domain.num_dofs:
        raise DGIGAError(f"coefficient vector has {len(coefficients)} entries, the domain has {domain.num_dofs} dofs")
    axis = np.linspace(0.0, 1.0, grid)
    mesh = np.meshgrid(*([axis] * domain.dim), indexing="ij")
    xhat = np.stack([m.ravel() for m in mesh], axis=1)
    rows = []
    for patch in range(domain.num_patches):
        x, values = evaluate_solution(domain, None, coefficients, patch, xhat)
        rows.append(np.column_stack((x, values)))
    return np.vstack(rows)


def write_samples(path: Union[str, Path], samples: np.ndarray, dim: int) -> Path:
    header = ",".join(["x", "y", "z"][:dim] + ["value"])
    lines = [header] + [",".join(f"{v:.17g}" for v in row) for row in samples]
    return _write(path, "\n".join(lines) + "\n")


def summarize(reports: Sequence[ConvergenceReport]) -> str:
    """Markdown table of final rates against predictions."""
    table = "| Problem | k | Scheme | Final dG rate | Predicted | Complete |\n"
    table += "|---|---|---|---|---|---|\n"
    for r in reports:
        final = r.final_dg_rate
        table += (f"| {r.problem} | {r.degree} | {r.scheme} | "
                  f"{'-' if final is None else f'{final:.2f}'} | "
                  f"{'-' if r.predicted_rate is None else f'{r.predicted_rate:.3f}'} | "
                  f"{'yes' if r.complete else 'NO'} |\n")
    return table
