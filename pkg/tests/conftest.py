import numpy as np
import pytest

from perflab.dataset import Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, n, dim, tau=1.0):
    X = rng.standard_normal((n, dim))
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[0], y[1] = 1.0, -1.0
    return Dataset(X, y, tau)
