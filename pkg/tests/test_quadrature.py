"""Gauss rules, element rules and merged interface segmentations."""

import math

import numpy as np
import pytest

from conftest import x_interface
from dgiga.errors import ParametricDomainError
from dgiga.geometry import (
    BoundaryFace,
    FaceSelector,
    InterfaceFace,
    MultiPatchDomain,
    box_patch,
    jacobians,
    normals_from_geometry,
)
from dgiga.quadrature import (
    boundary_segmentation,
    element_quadrature,
    face_quadrature,
    gauss_rule,
    merge_interface,
    segment_all,
)
from dgiga.splines import KnotVector, TensorSplineSpace, eval_tensor_basis_batch


class TestGaussRule:
    def test_midpoint(self):
        rule = gauss_rule(1)
        np.testing.assert_allclose(rule.points, [0.5])
        np.testing.assert_allclose(rule.weights, [1.0])

    def test_two_points(self):
        offset = 1.0 / (2.0 * math.sqrt(3.0))
        np.testing.assert_allclose(gauss_rule(2).points, [0.5 - offset, 0.5 + offset])

    def test_cubic_exactness(self):
        rule = gauss_rule(2)
        assert abs(rule.weights @ rule.points ** 3 - 0.25) <= 1e-15

    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_exact_to_degree_2n_minus_1(self, n):
        rule = gauss_rule(n)
        q = 2 * n - 1
        assert rule.weights @ rule.points ** q == pytest.approx(1.0 / (q + 1), abs=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_not_exact_at_degree_2n(self, n):
        rule = gauss_rule(n)
        m = 2 * n
        # remainder of the n-point rule on [0,1] for x^{2n}
        expected = math.factorial(n) ** 4 / ((2 * n + 1) * math.factorial(2 * n) ** 2)
        assert 1.0 / (m + 1) - rule.weights @ rule.points ** m == pytest.approx(expected, rel=1e-6)

    @pytest.mark.parametrize("n", [0, 31])
    def test_size_out_of_range(self, n):
        with pytest.raises(ParametricDomainError):
            gauss_rule(n)


class TestElementQuadrature:
    def test_single_element_midpoint(self):
        space = TensorSplineSpace.uniform(1, 1, 3)
        rule = element_quadrature(space, (0, 0, 0), 1)
        np.testing.assert_allclose(rule.points, [[0.5, 0.5, 0.5]])
        np.testing.assert_allclose(rule.weights, [1.0])

    def test_weights_sum_to_element_measure(self):
        space = TensorSplineSpace.uniform(2, [2, 4], 2)
        rule = element_quadrature(space, (1, 3), 3)
        assert rule.weights.sum() == pytest.approx(0.5 * 0.25)
        assert np.all(rule.points[:, 0] >= 0.5) and np.all(rule.points[:, 1] >= 0.75)

    def test_mass_entry_matches_monte_carlo(self):
        space = TensorSplineSpace.uniform(2, 2, 2)
        target = np.ravel_multi_index((1, 1), space.shape)
        total = 0.0
        for index in np.ndindex(*space.num_elements):
            rule = element_quadrature(space, index, space.degree + 1)
            batch = eval_tensor_basis_batch(space, rule.points, nderiv=0)
            values = np.where(batch.indices == target, batch.values, 0.0).sum(axis=1)
            total += rule.weights @ values ** 2
        samples = np.random.default_rng(7).random((1_000_000, 2))
        batch = eval_tensor_basis_batch(space, samples, nderiv=0)
        mc = np.mean(np.where(batch.indices == target, batch.values, 0.0).sum(axis=1) ** 2)
        assert total == pytest.approx(mc, abs=1e-3)

    def test_bad_element_index(self):
        with pytest.raises(ParametricDomainError):
            element_quadrature(TensorSplineSpace.uniform(1, 2, 2), (2, 0), 2)


class TestInterfaceSegmentation:
    def test_matching_2d(self):
        space = TensorSplineSpace.uniform(2, 2, 2)
        seg = merge_interface(x_interface(), space, space)
        assert len(seg.cells) == 2

    def test_matching_3d(self):
        space = TensorSplineSpace.uniform(1, 2, 3)
        face = InterfaceFace(0, FaceSelector(0, 1), 1, FaceSelector(0, 0), (0, 1), (False, False))
        assert len(merge_interface(face, space, space).cells) == 4

    def test_non_matching_union(self):
        left = TensorSplineSpace.uniform(1, 2, 2)
        right = TensorSplineSpace.uniform(1, 3, 2)
        seg = merge_interface(x_interface(), left, right)
        assert len(seg.cells) == 4
        np.testing.assert_allclose(seg.breakpoints[0], [0.0, 1 / 3, 0.5, 2 / 3, 1.0])
        second = seg.cells[1]
        assert second.left_element == (1, 0)
        assert second.right_element == (0, 1)
        assert seg.measure == pytest.approx(1.0)

    def test_flipped_breakpoints(self):
        left = TensorSplineSpace.uniform(1, 1, 2)
        right = TensorSplineSpace((KnotVector(1, [0, 0, 1, 1]), KnotVector(1, [0, 0, 0.25, 1, 1])))
        face = InterfaceFace(0, FaceSelector(0, 1), 1, FaceSelector(0, 0), (0,), (True,))
        seg = merge_interface(face, left, right)
        np.testing.assert_allclose(seg.breakpoints[0], [0.0, 0.75, 1.0])
        assert [c.right_element for c in seg.cells] == [(0, 1), (0, 0)]

    def test_boundary_trace(self):
        space = TensorSplineSpace.uniform(2, [3, 5], 2)
        seg = boundary_segmentation(BoundaryFace(0, FaceSelector(1, 0)), space)
        assert len(seg.cells) == 3
        assert not seg.is_interface

    def test_segment_all_order(self, split_square):
        segs = segment_all(split_square, split_square.solution_spaces)
        assert len(segs) == 1 + 6
        assert segs[0].is_interface and not any(s.is_interface for s in segs[1:])


class TestFaceQuadrature:
    def test_interface_length(self):
        patches = [box_patch([-1.0, 0.0], [0.0, 2.0], 0), box_patch([0.0, 0.0], [1.0, 2.0], 1)]
        domain = MultiPatchDomain.create(patches, [x_interface()], degree=2, elements=[2, 3])
        seg = merge_interface(domain.interfaces[0], *domain.solution_spaces)
        fq = face_quadrature(seg, 3)
        assert fq.weights.sum() == pytest.approx(1.0, abs=1e-14)
        geo = jacobians(domain.patches[0], fq.left_points)
        _, factors = normals_from_geometry(geo, domain.interfaces[0].left_face)
        assert abs(fq.weights @ factors - 2.0) <= 1e-13

    def test_points_coincide_physically(self):
        patches = [box_patch([-1.0, 0.0], [0.0, 2.0], 0), box_patch([0.0, 0.0], [1.0, 2.0], 1)]
        domain = MultiPatchDomain.create(patches, [x_interface()], degree=1, elements=[2, 3])
        seg = merge_interface(domain.interfaces[0], *domain.solution_spaces)
        fq = face_quadrature(seg, 2)
        left = jacobians(domain.patches[0], fq.left_points).x
        right = jacobians(domain.patches[1], fq.right_points).x
        np.testing.assert_allclose(left, right, atol=1e-14)
        assert len(fq.cell_slices) == 4
