import numpy as np
import pytest

from dickedrive import make_spin_ops


@pytest.fixture(scope="session")
def ops4():
    return make_spin_ops(4)


@pytest.fixture(scope="session")
def ops6():
    return make_spin_ops(6)


@pytest.fixture(scope="session")
def ops30():
    return make_spin_ops(30)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
