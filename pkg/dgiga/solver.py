"""
dgiga - Linear Solver v1.0
Jacobi-preconditioned CG (SIP) and BiCGStab (IIP) on the assembled sparse
system, plus a dense LU oracle for small systems.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .config import SolverConfig
from .errors import ContractError, SolverBreakdownError, SolverError

logger = logging.getLogger(__name__)


@dataclass
class SolveReport:
    """Outcome of one linear solve; the residual is recomputed after the iteration."""
    iterations: int
    relative_residual: float
    converged: bool
    wall_time: float
    method: str = ""

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "relative_residual": self.relative_residual,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "method": self.method,
        }


def _unpack(system, rhs: Optional[np.ndarray]) -> Tuple[sp.csr_matrix, np.ndarray]:
    if rhs is None:
        matrix, rhs = system.matrix, system.rhs
    else:
        matrix = system
    matrix = sp.csr_matrix(matrix, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] != rhs.shape[0]:
        raise ContractError(f"matrix {matrix.shape} and right-hand side {rhs.shape} do not match")
    return matrix, rhs


def relative_residual(matrix, rhs: np.ndarray, x: np.ndarray) -> float:
    """‖b − Ax‖₂ / ‖b‖₂ (absolute residual when b = 0)."""
    r = np.linalg.norm(rhs - matrix @ x)
    b = np.linalg.norm(rhs)
    return float(r / b) if b > 0.0 else float(r)


def jacobi_preconditioner(matrix: sp.csr_matrix) -> spla.LinearOperator:
    """M⁻¹ = diag(A)⁻¹; a zero diagonal entry is a breakdown."""
    diag = matrix.diagonal()
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise SolverBreakdownError(f"zero diagonal entry in row {int(zero[0])}; Jacobi preconditioner undefined")
    inv = 1.0 / diag
    return spla.LinearOperator(matrix.shape, matvec=lambda v: inv * np.ravel(v), dtype=float)


def _krylov(method: str, matrix, rhs: np.ndarray, tol: Optional[float], max_iter: Optional[int],
            precondition: bool) -> Tuple[np.ndarray, SolveReport]:
    tol = SolverConfig.SOLVER_TOL if tol is None else tol
    n = matrix.shape[0]
    max_iter = SolverConfig.max_iterations(n) if max_iter is None else max_iter
    start = time.perf_counter()

    if not np.any(rhs):
        report = SolveReport(0, 0.0, True, time.perf_counter() - start, method)
        return np.zeros(n), report

    row_mass = np.asarray(abs(matrix).sum(axis=1)).ravel()
    if np.any(row_mass == 0.0):
        raise SolverBreakdownError(f"row {int(np.argmin(row_mass))} of the matrix is zero")
    M = jacobi_preconditioner(matrix) if precondition else None

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    krylov = spla.cg if method == "cg" else spla.bicgstab
    x, info = krylov(matrix, rhs, rtol=tol, atol=0.0, maxiter=max_iter, M=M, callback=count)
    residual = relative_residual(matrix, rhs, x)
    # the recurrence residual can drift from the true one; restart from x
    for _ in range(SolverConfig.MAX_RESTARTS):
        if info != 0 or residual <= tol or not np.isfinite(residual):
            break
        x, info = krylov(matrix, rhs, x0=x, rtol=tol, atol=0.0, maxiter=max_iter, M=M, callback=count)
        residual = relative_residual(matrix, rhs, x)
    elapsed = time.perf_counter() - start

    if info < 0 or not np.all(np.isfinite(x)):
        report = SolveReport(iterations, float("nan"), False, elapsed, method)
        raise SolverBreakdownError(f"{method} broke down (info={info}) after {iterations} iterations", report)

    report = SolveReport(iterations, residual, residual <= tol, elapsed, method)
    if not report.converged:
        logger.warning("%s did not reach tol %.1e: residual %.3e after %d iterations",
                       method, tol, residual, iterations)
        raise SolverError(f"{method} did not converge: residual {residual:.3e} after {iterations} iterations",
                          report)
    logger.info("%s converged in %d iterations (residual %.2e, %.2fs)", method, iterations, residual, elapsed)
    return x, report


def solve_spd(system, rhs: Optional[np.ndarray] = None, tol: Optional[float] = None,
              max_iter: Optional[int] = None, precondition: bool = True) -> Tuple[np.ndarray, SolveReport]:
    """Preconditioned conjugate gradients for a symmetric system.

    ``system`` is a :class:`DGSystem` or, together with ``rhs``, a sparse matrix.
    Raises ContractError for non-symmetric input and SolverError on non-convergence.
    """
    matrix, b = _unpack(system, rhs)
    norm = spla.norm(matrix)
    if norm > 0.0:
        defect = spla.norm(matrix - matrix.T) / norm
        if defect > SolverConfig.SYMMETRY_CHECK_TOL:
            raise ContractError(f"CG requires a symmetric matrix (relative defect {defect:.3e})")
    return _krylov("cg", matrix, b, tol, max_iter, precondition)


def solve_general(system, rhs: Optional[np.ndarray] = None, tol: Optional[float] = None,
                  max_iter: Optional[int] = None, precondition: bool = True) -> Tuple[np.ndarray, SolveReport]:
    """Jacobi-preconditioned BiCGStab for nonsymmetric (IIP) systems."""
    matrix, b = _unpack(system, rhs)
    return _krylov("bicgstab", matrix, b, tol, max_iter, precondition)


def dense_solve(system, rhs: Optional[np.ndarray] = None) -> np.ndarray:
    """Direct LU solve; test oracle for systems up to DENSE_ORACLE_MAX_DOFS."""
    matrix, b = _unpack(system, rhs)
    n = matrix.shape[0]
    if n > SolverConfig.DENSE_ORACLE_MAX_DOFS:
        raise ContractError(f"dense oracle limited to {SolverConfig.DENSE_ORACLE_MAX_DOFS} dofs, got {n}")
    try:
        lu, piv = sla.lu_factor(matrix.toarray(), check_finite=True)
    except (ValueError, sla.LinAlgError) as exc:
        raise SolverBreakdownError(f"dense LU failed: {exc}") from exc
    if np.any(np.diag(lu) == 0.0):
        raise SolverBreakdownError("dense LU: matrix is singular")
    return sla.lu_solve((lu, piv), b)
