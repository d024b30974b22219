import numpy as np
import pytest
from scipy import stats

from vorpoly import ppp


def test_sample_is_reproducible():
    w = ppp.Window.square(5.0)
    m = ppp.IntensityModel.homogeneous(2.0)
    a = ppp.sample(w, m, 4, 2)
    b = ppp.sample(w, m, 4, 2)
    assert np.array_equal(a.points, b.points)
    assert np.all(w.contains(a.points))


def test_counts_are_poisson():
    w = ppp.Window.square(1.0)
    m = ppp.IntensityModel.homogeneous(3.0)
    n = np.array([len(ppp.sample(w, m, 0, r)) for r in range(2000)])
    # mean 12; the standard error of the mean is 0.077
    assert abs(n.mean() - 12.0) < 0.4
    assert abs(n.var() - 12.0) < 1.5


def test_uniform_positions():
    pts = ppp.sample(ppp.Window.square(10.0), ppp.IntensityModel.homogeneous(5.0), 1)
    assert stats.kstest((pts.points[:, 0] + 10) / 20, "uniform").pvalue > 1e-3


def test_text_round_trip():
    pts = ppp.sample(ppp.Window.square(2.0), ppp.IntensityModel.homogeneous(1.0), 9, 3)
    back = ppp.PointSet.from_text(pts.to_text())
    assert (back.window, back.seed, back.replicate) == (pts.window, 9, 3)
    assert np.array_equal(back.points, pts.points)


def test_bounded_intensity_thinning():
    dens = lambda x: 1.0 + 1.0 * (x[:, 0] > 0)
    m = ppp.IntensityModel.bounded(dens, 2.0)
    n_left = n_right = 0
    for r in range(200):
        p = ppp.sample(ppp.Window.square(2.0), m, 0, r).points
        n_left += int((p[:, 0] < 0).sum())
        n_right += int((p[:, 0] >= 0).sum())
    assert 0.4 < n_left / n_right < 0.6


def test_density_above_bound_raises():
    m = ppp.IntensityModel.bounded(lambda x: np.full(len(x), 3.0), 2.0)
    with pytest.raises(ppp.IntensityBoundError):
        ppp.sample(ppp.Window.square(2.0), m, 0)


def test_lattice_counts_half_open():
    w = ppp.Window.square(3.0)
    pts = ppp.PointSet(np.array([[0.5, 0.0], [-0.5, 0.0], [0.49, 0.49]]), w)
    c = ppp.lattice_counts(pts, (-1, -1), (1, 1))
    # B_z = z + [-1/2, 1/2)^2
    assert c[(1, 0)] == 1 and c[(0, 0)] == 2 and c.get((-1, 0), 0) == 0
