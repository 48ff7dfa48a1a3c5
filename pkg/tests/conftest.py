import numpy as np
import pytest

from semwave import build_space, generate_box_mesh

UNIT_BOX = [(0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def unit_mesh():
    """Single-element unit cube."""
    return generate_box_mesh(UNIT_BOX, (1, 1, 1))


@pytest.fixture(scope="session")
def cube2_mesh():
    return generate_box_mesh(UNIT_BOX, (2, 2, 2))


@pytest.fixture(scope="session")
def unit_space_r1(unit_mesh):
    return build_space(unit_mesh, 1)


@pytest.fixture(scope="session")
def unit_space_r2(unit_mesh):
    return build_space(unit_mesh, 2)


@pytest.fixture(scope="session")
def cube2_space_r2(cube2_mesh):
    return build_space(cube2_mesh, 2)
