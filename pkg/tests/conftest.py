import itertools

import numpy as np
import pytest

from netcontagion.model import ExposureSystem

CONTAGION_X = [[2.0, 0.0], [0.0, 2.0]]
ONE_WAY_L = [[0.0, 0.0], [0.5, 0.0]]
MUTUAL_L = [[0.0, 0.6], [0.6, 0.0]]


def brute_fixed_points(X, L, v):
    """Every f in {0,1}^N with I(Xv + Lf >= 1) == f, found by plain loops."""
    X, L, v = np.asarray(X, float), np.asarray(L, float), np.asarray(v, float)
    n = X.shape[0]
    found = []
    for bits in itertools.product((0, 1), repeat=n):
        ok = True
        for i in range(n):
            y = sum(X[i, j] * v[j] for j in range(X.shape[1])) + sum(L[i, j] * bits[j] for j in range(n))
            if (y >= 1.0) != bool(bits[i]):
                ok = False
                break
        if ok:
            found.append(tuple(bool(b) for b in bits))
    return found


def least_and_greatest(fps):
    return tuple(all(c) for c in zip(*fps)), tuple(any(c) for c in zip(*fps))


def random_system(rng, n, m, link_p=0.6, x_scale=3.0):
    X = rng.uniform(0, x_scale, (n, m)) * (rng.random((n, m)) < 0.8)
    L = rng.uniform(0, 1, (n, n)) * (rng.random((n, n)) < link_p)
    np.fill_diagonal(L, 0.0)
    return ExposureSystem(X, L)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def contagion_system():
    return ExposureSystem(CONTAGION_X, ONE_WAY_L)


@pytest.fixture
def mutual_system():
    return ExposureSystem(CONTAGION_X, MUTUAL_L)
