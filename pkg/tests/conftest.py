import numpy as np
import pytest

from neckdown import Profile, make_grid


@pytest.fixture(scope="session")
def grid201():
    return make_grid(201)


@pytest.fixture(scope="session")
def grid401():
    return make_grid(401)


@pytest.fixture
def profile_factory(grid201):
    def build(values, pressure=1.0, grid=None):
        return Profile(grid=grid or grid201, values=np.asarray(values, float),
                       pressure=pressure)

    return build
