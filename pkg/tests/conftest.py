import numpy as np
import pytest

from nbbtf import RngStream, pg_draw


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # trigger the JIT compile once so timed tests measure sampling, not compilation
    pg_draw(1, 0.3, RngStream(0))


@pytest.fixture()
def rng():
    return RngStream(20240811)


def batch_se(x, n_batches=100):
    """Standard error of the mean of a correlated chain via batch means."""
    x = np.asarray(x)
    m = x.shape[0] // n_batches
    means = x[: m * n_batches].reshape(n_batches, m).mean(axis=1)
    return means.std(ddof=1) / np.sqrt(n_batches)
