import numpy as np
import pytest

from sharplab.nonlinearity import make_cubic
from sharplab.profile import solve_profile


@pytest.fixture(scope="session")
def cubic():
    return make_cubic()


@pytest.fixture(scope="session")
def cubic_profile(cubic):
    return solve_profile(cubic, z_max=10.0, n=4000)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250809)
