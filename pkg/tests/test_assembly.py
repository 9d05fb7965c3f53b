"""Volume, face and load assembly; patch tests; coercivity."""

import dataclasses

import numpy as np
import pytest

from conftest import x_interface
from dgiga.analysis import dg_norm_error, l2_error
from dgiga.assembly import (
    DGConfig,
    DofMap,
    Scheme,
    assemble,
    assemble_interface,
    assemble_penalty,
    assemble_rhs,
    assemble_volume,
    coercivity_probe,
    dg_norm_matrix,
    iterate_face_cells,
)
from dgiga.config import SolverConfig
from dgiga.domain_loader import load_config
from dgiga.errors import ContractError
from dgiga.geometry import MultiPatchDomain, box_patch
from dgiga.problems import get_problem
from dgiga.quadrature import gauss_rule, tensor_rule
from dgiga.solver import dense_solve, solve_general, solve_spd
from dgiga.splines import eval_tensor_basis_batch


def zero(x):
    return np.zeros(len(x))


def one(x):
    return np.ones(len(x))


class TestDGConfig:
    def test_default_penalty(self):
        assert DGConfig().penalty(2, 3) == pytest.approx(2 * 3 * 5)
        assert DGConfig(mu=7.5).penalty(2, 3) == 7.5

    def test_quadrature_points(self):
        assert DGConfig().form_points(2) == 3
        assert DGConfig().load_points(2) == 4
        override = DGConfig(quadrature_order=5)
        assert (override.form_points(2), override.load_points(2)) == (5, 6)

    def test_invalid_penalty(self):
        with pytest.raises(ValueError):
            DGConfig(mu=-1.0)


class TestDofMap:
    def test_blocks(self, split_square):
        dofmap = DofMap.from_spaces(split_square.solution_spaces)
        assert dofmap.sizes == (9, 16)
        assert dofmap.block(1) == slice(9, 25)
        parts = dofmap.split(np.arange(25.0))
        assert parts[1][0] == 9.0


class TestVolume:
    def test_unit_square_matches_dense_quadrature(self, unit_square):
        matrix = assemble_volume(unit_square).matrix.toarray()
        np.testing.assert_allclose(np.diag(matrix), 2.0 / 3.0, atol=1e-14)

        rule = gauss_rule(20)
        points, weights = tensor_rule([rule.points] * 2, [rule.weights] * 2)
        batch = eval_tensor_basis_batch(unit_square.solution_spaces[0], points)
        np.testing.assert_array_equal(batch.indices, np.tile(np.arange(4), (len(points), 1)))
        oracle = np.einsum("m,mai,mbi->ab", weights, batch.gradients, batch.gradients)
        np.testing.assert_allclose(matrix, oracle, atol=1e-12)

    def test_constants_in_kernel(self, split_square):
        matrix = assemble_volume(split_square.with_degree(2)).matrix
        np.testing.assert_allclose(matrix @ np.ones(matrix.shape[0]), 0.0, atol=1e-12)

    def test_alpha_scales_blocks(self, two_unit_squares):
        scaled = dataclasses.replace(two_unit_squares, alpha=(1.0, 5.0))
        base = assemble_volume(two_unit_squares).matrix.toarray()
        other = assemble_volume(scaled).matrix.toarray()
        np.testing.assert_allclose(other[:4, :4], base[:4, :4])
        np.testing.assert_allclose(other[4:, 4:], 5.0 * base[4:, 4:])

    def test_workers_do_not_change_result(self):
        _, domain = load_config("nonmatching2d.json")
        serial = assemble_volume(domain, config=DGConfig(workers=1)).matrix
        threaded = assemble_volume(domain, config=DGConfig(workers=3)).matrix
        np.testing.assert_array_equal(serial.indptr, threaded.indptr)
        np.testing.assert_array_equal(serial.indices, threaded.indices)
        np.testing.assert_array_equal(serial.data, threaded.data)


class TestFaceTerms:
    def test_consistency_term_for_linear_field(self, two_unit_squares):
        config = DGConfig(scheme=Scheme.IIP)
        u = np.array([-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0])  # u = x
        flux = assemble_interface(two_unit_squares, config=config).matrix @ u
        # left patch: +∫_{x=-1} φ ds from the boundary, −∫_{x=0} φ ds from the interface
        np.testing.assert_allclose(flux[:4], [0.5, 0.5, -0.5, -0.5], atol=1e-12)
        np.testing.assert_allclose(flux[4:], [0.5, 0.5, -0.5, -0.5], atol=1e-12)

    def test_penalty_energy_of_one_sided_field(self, two_unit_squares):
        matrix = assemble_penalty(two_unit_squares, config=DGConfig(mu=10.0)).matrix
        v = np.array([1.0] * 4 + [0.0] * 4)
        interface = (10.0 / 1.0 + 10.0 / 1.0) * 1.0
        boundary = 3 * (10.0 / 1.0) * 1.0
        assert v @ (matrix @ v) == pytest.approx(interface + boundary, abs=1e-12)

    def test_continuous_field_has_no_interface_penalty(self, two_unit_squares):
        matrix = assemble_penalty(two_unit_squares, config=DGConfig(mu=10.0)).matrix
        v = np.ones(8)
        # only the boundary of [-1,1]×[0,1] (perimeter 6) is penalized
        assert v @ (matrix @ v) == pytest.approx(60.0, abs=1e-12)

    def test_interface_measure(self):
        patches = [box_patch([-1.0, 0.0], [0.0, 2.0], 0), box_patch([0.0, 0.0], [1.0, 2.0], 1)]
        domain = MultiPatchDomain.create(patches, [x_interface()], degree=2, elements=[2, 3])
        dofmap = DofMap.from_spaces(domain.solution_spaces)
        length = sum(cell.weights.sum() for cell in iterate_face_cells(domain, domain.solution_spaces, dofmap, 3)
                     if cell.right is not None)
        assert abs(length - 2.0) <= 1e-13

    def test_one_sided_refinement_doubles_that_penalty_weight(self):
        patches = [box_patch([-1.0, 0.0], [0.0, 1.0], 0), box_patch([0.0, 0.0], [1.0, 1.0], 1)]
        domain = MultiPatchDomain.create(patches, [x_interface()], degree=1, elements=[1, 2])
        assert domain.mesh_sizes() == (1.0, 0.5)
        matrix = assemble_penalty(domain, config=DGConfig(mu=10.0)).matrix
        v = np.array([1.0] * 4 + [0.0] * 9)
        interface = (10.0 / 1.0 + 2 * 10.0 / 1.0) * 1.0
        boundary = 3 * (10.0 / 1.0) * 1.0
        assert v @ (matrix @ v) == pytest.approx(interface + boundary, abs=1e-12)

    @pytest.mark.parametrize("scheme", [Scheme.SIP, Scheme.IIP])
    def test_reversed_interface_gives_same_system(self, scheme):
        _, domain = load_config("twopatch2d.json")
        flipped = dataclasses.replace(domain, interfaces=tuple(f.reversed() for f in domain.interfaces))
        problem = get_problem("smooth", d=2)
        config = DGConfig(scheme=scheme)
        base = assemble(domain, None, config, problem.source, problem.dirichlet)
        other = assemble(flipped, None, config, problem.source, problem.dirichlet)
        scale = abs(base.matrix).max()
        np.testing.assert_allclose(other.matrix.toarray(), base.matrix.toarray(), atol=1e-12 * scale)
        np.testing.assert_allclose(other.rhs, base.rhs, atol=1e-12 * np.abs(base.rhs).max())

    def test_iip_asymmetry_is_the_consistency_block(self):
        _, domain = load_config("annulus2d.json")
        config = DGConfig(scheme=Scheme.IIP)
        matrix = assemble(domain, config=config).matrix.toarray()
        consistency = assemble_interface(domain, config=config).matrix.toarray()
        scale = np.abs(matrix).max()
        np.testing.assert_allclose(matrix - matrix.T, consistency - consistency.T, atol=1e-12 * scale)
        sip = assemble(domain, config=DGConfig(scheme=Scheme.SIP)).matrix.toarray()
        np.testing.assert_allclose(sip - matrix, consistency.T, atol=1e-12 * scale)

    def test_sip_symmetric_iip_not(self):
        _, domain = load_config("annulus2d.json")
        sip = assemble(domain, config=DGConfig(scheme=Scheme.SIP))
        iip = assemble(domain, config=DGConfig(scheme=Scheme.IIP))
        assert sip.symmetry_defect() <= SolverConfig.SIP_SYMMETRY_TOL
        assert iip.symmetry_defect() > 1e-6


class TestRightHandSide:
    def test_zero_data(self, split_square):
        rhs = assemble_rhs(split_square, f=zero, u_D=zero)
        np.testing.assert_array_equal(rhs, 0.0)

    def test_unit_load(self, unit_square):
        np.testing.assert_allclose(assemble_rhs(unit_square, f=one), 0.25, atol=1e-15)

    def test_dirichlet_penalty_of_constant(self, unit_square):
        rhs = assemble_rhs(unit_square, config=DGConfig(scheme=Scheme.IIP, mu=3.0), u_D=one)
        # each corner function touches two unit edges with ∫φ ds = 1/2
        np.testing.assert_allclose(rhs, 3.0, atol=1e-13)

    def test_linear_in_data(self, split_square):
        domain = split_square.with_degree(2)

        def f1(x):
            return np.sin(3.0 * x[:, 0]) * x[:, 1]

        def f2(x):
            return x[:, 0] ** 2 + 1.0

        def f12(x):
            return f1(x) + 2.5 * f2(x)

        for scheme in (Scheme.SIP, Scheme.IIP):
            config = DGConfig(scheme=scheme)
            combined = assemble_rhs(domain, config=config, f=f12, u_D=f12)
            parts = (assemble_rhs(domain, config=config, f=f1, u_D=f1)
                     + 2.5 * assemble_rhs(domain, config=config, f=f2, u_D=f2))
            np.testing.assert_allclose(combined, parts, atol=1e-12 * np.abs(combined).max())


class TestPatchTest:
    def _errors(self, domain, problem, scheme, solve):
        config = DGConfig(scheme=scheme)
        system = assemble(domain, None, config, problem.source, problem.dirichlet)
        x = solve(system)
        dg = dg_norm_error(domain, None, x, problem.exact, problem.gradient, config)
        return dg, l2_error(domain, None, x, problem.exact, config)

    @pytest.mark.parametrize("scheme", [Scheme.SIP, Scheme.IIP])
    def test_bilinear_on_non_matching_meshes(self, scheme):
        _, domain = load_config("twopatch2d.json")
        dg, l2 = self._errors(domain, get_problem("bilinear", d=2), scheme, dense_solve)
        assert dg <= 1e-8
        assert l2 <= 1e-8

    def test_split_and_single_patch_agree(self, split_square):
        problem = get_problem("polynomial", d=2)
        single = MultiPatchDomain.create([box_patch([-0.5, -0.5], [0.5, 0.5])], [], degree=2, elements=4)
        for domain in (single, split_square.with_degree(2)):
            dg, l2 = self._errors(domain, problem, Scheme.SIP, dense_solve)
            assert dg <= 1e-8
            assert l2 <= 1e-8

    @pytest.mark.parametrize("scheme,solver", [(Scheme.SIP, solve_spd), (Scheme.IIP, solve_general)])
    def test_iterative_solvers(self, split_square, scheme, solver):
        problem = get_problem("polynomial", d=2)
        dg, _ = self._errors(split_square.with_degree(2), problem, scheme,
                             lambda s: solver(s, tol=1e-12)[0])
        assert dg <= 1e-6


class TestCoercivity:
    def test_coefficient_jump_stays_coercive(self, split_square):
        domain = dataclasses.replace(split_square, alpha=(1.0, 100.0))
        system = assemble(domain, config=DGConfig())
        estimate = coercivity_probe(system, dg_norm_matrix(domain), samples=100)
        assert estimate.passed
        assert estimate.min_ratio >= 0.05


class TestDGSystem:
    def test_add_rejects_other_dofmap(self, unit_square, split_square):
        with pytest.raises(ContractError):
            assemble_volume(unit_square) + assemble_volume(split_square)
