import numpy as np
import pytest

from pointgen.skeleton import make_desk_arm, make_toy_arm


@pytest.fixture
def toy_arm():
    return make_toy_arm()


@pytest.fixture
def desk_arm():
    return make_desk_arm()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
