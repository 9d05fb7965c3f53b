"""Shared fixtures for the dgiga test suite."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from dgiga.geometry import FaceSelector, InterfaceFace, MultiPatchDomain, box_patch


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full refinement studies (deselect with -m 'not slow')")


def x_interface(left: int = 0, right: int = 1) -> InterfaceFace:
    """Left patch's face x̂0 = 1 glued to the right patch's face x̂0 = 0."""
    return InterfaceFace(left, FaceSelector(0, 1), right, FaceSelector(0, 0))


@pytest.fixture
def unit_square():
    """Single identity patch on [0,1]², k = 1, one element."""
    return MultiPatchDomain.create([box_patch([0.0, 0.0], [1.0, 1.0])], [], degree=1, elements=1)


@pytest.fixture
def two_unit_squares():
    """[-1,0]×[0,1] and [0,1]×[0,1] joined along x = 0, k = 1, one element each (h = 1)."""
    patches = [box_patch([-1.0, 0.0], [0.0, 1.0], 0), box_patch([0.0, 0.0], [1.0, 1.0], 1)]
    return MultiPatchDomain.create(patches, [x_interface()], degree=1, elements=1)


@pytest.fixture
def split_square():
    """(-1/2,1/2)² split at x = 0 into two patches with non-matching meshes (2 and 3 elements)."""
    patches = [box_patch([-0.5, -0.5], [0.0, 0.5], 0), box_patch([0.0, -0.5], [0.5, 0.5], 1)]
    return MultiPatchDomain.create(patches, [x_interface()], degree=1, elements=[2, 3])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
