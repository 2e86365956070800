import numpy as np
import pytest

from spikedcov._blas import single_threaded_blas


@pytest.fixture(autouse=True, scope="session")
def _pin_blas_threads():
    # small-matrix loops dominate the suite; threaded BLAS only adds sync cost
    with single_threaded_blas():
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_symmetric(rng, p, scale=1.0):
    m = rng.standard_normal((p, p)) * scale
    return (m + m.T) / 2.0


def random_spd(rng, p, ridge=1.0):
    m = rng.standard_normal((p, p))
    return m.T @ m + ridge * np.eye(p)
