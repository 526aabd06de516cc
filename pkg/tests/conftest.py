import numpy as np
import pytest

from hbavg import kernels


@pytest.fixture(params=["numba", "numpy"])
def kernel_path(request, monkeypatch):
    """Run the test under both execution paths (env flag read per call)."""
    if request.param == "numpy":
        monkeypatch.setenv(kernels.DISABLE_ENV, "1")
    else:
        monkeypatch.delenv(kernels.DISABLE_ENV, raising=False)
        if not kernels.HAS_NUMBA:
            pytest.skip("numba not importable")
    return request.param


def central_diff_gradient(problem, x, h=None):
    """Independent gradient oracle: central differences, one coordinate at
    a time, with the contractual step h = 1e-6 * max(1, ||x||)."""
    x = np.asarray(x, dtype=np.float64)
    if h is None:
        h = 1e-6 * max(1.0, float(np.linalg.norm(x)))
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * h)
    return grad


def direct_weighted_mean(vectors, log_weights):
    """Direct weighted-mean oracle (no recurrence, raw weights)."""
    w = np.exp(np.asarray(log_weights, dtype=np.float64))
    return (w[:, None] * vectors).sum(axis=0) / w.sum()
