import numpy as np
import pytest

from vorpoly import ppp
from vorpoly.polyomino import Tiling


def poisson_points(half, lam=1.0, seed=0, rep=0):
    return ppp.sample(ppp.Window.square(half), ppp.IntensityModel.homogeneous(lam), seed, rep)


@pytest.fixture(scope="session")
def tiling12():
    """One lambda = 1 realization on [-12, 12)^2, shared by read-only tests."""
    return Tiling(poisson_points(12.0, seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
