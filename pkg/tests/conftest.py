import numpy as np
import pytest

from blockspectra import make_case


@pytest.fixture(scope="session")
def case3():
    return make_case(3, seed=0)


@pytest.fixture(scope="session")
def case4():
    return make_case(4, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
