import numpy as np
import pytest

from hetsim.config import SimConfig


@pytest.fixture
def cfg():
    return SimConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def two_user_toy():
    """The classic symmetric toy: unit serving gains, 0.1 cross gains,
    noise 0.1, unit targets. TPC fixed point is (1/9, 1/9)."""
    a = np.array([[1.0, 0.1], [0.1, 1.0]])
    noise = np.array([0.1, 0.1])
    targets = np.array([1.0, 1.0])
    return a, noise, targets
