import numpy as np
import pytest

from chartcnn.gbm import GbmParams, simulate_path


@pytest.fixture
def params():
    return GbmParams(r=0.05, sigma=0.2, dt=1 / 252, s0=100.0)


@pytest.fixture
def short_path(params):
    return simulate_path(params, 60, seed=123)


def assert_arrays_equal(a, b):
    np.testing.assert_array_equal(np.asarray(a), np.asarray(b))
