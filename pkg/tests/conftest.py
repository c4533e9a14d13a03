import numpy as np
import pytest

from steinfisher.distributions import catalog_get

CATALOG_NAMES = ("gaussian", "uniform", "exponential_centered", "student_t(20)")


@pytest.fixture(params=CATALOG_NAMES)
def catalog_dist(request):
    return catalog_get(request.param)


def ks_statistic(samples, cdf):
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    c = cdf(x)
    return max(np.max(np.arange(1, n + 1) / n - c),
               np.max(c - np.arange(0, n) / n))
