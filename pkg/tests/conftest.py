import numpy as np
import pytest

from spst import manifold as mf


def rel(a, b):
    """Relative Frobenius distance with a floor of 1 on the scale."""
    return np.linalg.norm(a - b) / max(1.0, np.linalg.norm(b))


@pytest.fixture
def small_point():
    return mf.random_point(20, 3, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
