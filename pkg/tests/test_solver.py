"""Krylov solvers and the dense LU oracle."""

import numpy as np
import pytest
import scipy.sparse as sp

from dgiga.assembly import DGConfig, Scheme, assemble
from dgiga.domain_loader import load_config
from dgiga.errors import ContractError, SolverBreakdownError, SolverError
from dgiga.problems import get_problem
from dgiga.solver import dense_solve, jacobi_preconditioner, relative_residual, solve_general, solve_spd


@pytest.fixture(scope="module")
def smooth_sip_system():
    _, domain = load_config("smooth2d.json")
    problem = get_problem("smooth", d=2)
    return assemble(domain, None, DGConfig(), problem.source, problem.dirichlet)


class TestSolveSPD:
    def test_identity(self, rng):
        b = rng.standard_normal(6)
        x, report = solve_spd(sp.identity(6, format="csr"), b)
        np.testing.assert_allclose(x, b)
        assert report.iterations <= 1
        assert report.converged

    def test_diagonal(self):
        x, _ = solve_spd(sp.csr_matrix([[2.0, 0.0], [0.0, 1.0]]), np.array([2.0, 1.0]))
        np.testing.assert_allclose(x, [1.0, 1.0])

    def test_zero_rhs(self):
        x, report = solve_spd(sp.identity(3, format="csr"), np.zeros(3))
        np.testing.assert_array_equal(x, 0.0)
        assert report.iterations == 0

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ContractError):
            solve_spd(sp.csr_matrix([[2.0, 1.0], [0.0, 1.0]]), np.ones(2))

    def test_shape_mismatch(self):
        with pytest.raises(ContractError):
            solve_spd(sp.identity(3, format="csr"), np.ones(2))

    def test_matches_dense_oracle(self, smooth_sip_system):
        x, report = solve_spd(smooth_sip_system, tol=1e-12)
        oracle = dense_solve(smooth_sip_system)
        assert report.relative_residual <= 1e-12
        assert relative_residual(smooth_sip_system.matrix, smooth_sip_system.rhs, x) <= 1e-12
        assert np.linalg.norm(x - oracle) <= 1e-8 * max(1.0, np.linalg.norm(oracle))

    def test_repeated_solves_are_bitwise_identical(self, smooth_sip_system):
        first, _ = solve_spd(smooth_sip_system, tol=1e-10)
        second, _ = solve_spd(smooth_sip_system, tol=1e-10)
        np.testing.assert_array_equal(first, second)

    def test_preconditioning_does_not_change_solution(self, smooth_sip_system):
        tol = 1e-12
        with_jacobi, _ = solve_spd(smooth_sip_system, tol=tol)
        plain, report = solve_spd(smooth_sip_system, tol=tol, precondition=False)
        assert report.converged
        assert np.linalg.norm(plain - with_jacobi) <= 1e-8 * np.linalg.norm(with_jacobi)

    def test_non_convergence_reports(self, smooth_sip_system):
        with pytest.raises(SolverError) as info:
            solve_spd(smooth_sip_system, max_iter=1)
        assert info.value.report is not None
        assert not info.value.report.converged


class TestSolveGeneral:
    def test_agrees_with_cg_on_symmetric(self, smooth_sip_system):
        x_cg, _ = solve_spd(smooth_sip_system, tol=1e-12)
        x_bi, _ = solve_general(smooth_sip_system, tol=1e-12)
        assert np.linalg.norm(x_cg - x_bi) <= 1e-8 * max(1.0, np.linalg.norm(x_cg))

    def test_iip_matches_dense_oracle(self):
        _, domain = load_config("twopatch2d.json")
        problem = get_problem("bilinear", d=2)
        system = assemble(domain, None, DGConfig(scheme=Scheme.IIP), problem.source, problem.dirichlet)
        x, report = solve_general(system, tol=1e-12)
        assert report.method == "bicgstab"
        np.testing.assert_allclose(x, dense_solve(system), atol=1e-8)

    def test_zero_row_breaks_down(self):
        matrix = sp.csr_matrix([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(SolverBreakdownError):
            solve_general(matrix, np.ones(2))


class TestDenseOracle:
    def test_small_system(self):
        matrix = sp.csr_matrix([[4.0, 1.0], [2.0, 3.0]])
        np.testing.assert_allclose(dense_solve(matrix, np.array([5.0, 5.0])), [1.0, 1.0])

    def test_singular(self):
        with pytest.raises(SolverBreakdownError):
            dense_solve(sp.csr_matrix([[1.0, 2.0], [2.0, 4.0]]), np.ones(2))

    def test_size_limit(self):
        with pytest.raises(ContractError):
            dense_solve(sp.identity(2001, format="csr"), np.ones(2001))


class TestJacobi:
    def test_zero_diagonal(self):
        with pytest.raises(SolverBreakdownError):
            jacobi_preconditioner(sp.csr_matrix([[0.0, 1.0], [1.0, 2.0]]))

    def test_inverse_diagonal(self):
        M = jacobi_preconditioner(sp.csr_matrix([[2.0, 0.0], [0.0, 4.0]]))
        np.testing.assert_allclose(M.matvec(np.array([1.0, 1.0])), [0.5, 0.25])
