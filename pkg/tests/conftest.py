import numpy as np
import pytest

from effcap.constellation import from_name


@pytest.fixture(scope="session")
def bpsk():
    return from_name("bpsk")


@pytest.fixture(scope="session")
def qam4():
    return from_name("qam4")


@pytest.fixture(scope="session")
def gaussian():
    return from_name("gaussian")


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
