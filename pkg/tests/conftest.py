import numpy as np
import pytest

from sobolev_action import SliceSpec, make_grid, random_sphere_field


@pytest.fixture(scope="session")
def torus64():
    return make_grid("torus", 64)


@pytest.fixture(scope="session")
def torus32():
    return make_grid("torus", 32)


@pytest.fixture(scope="session")
def sphere64():
    return make_grid("sphere", 64)


@pytest.fixture(scope="session")
def center(sphere64):
    return random_sphere_field(sphere64, 0, 4)


@pytest.fixture(scope="session")
def spec(center):
    return SliceSpec.through(center)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
