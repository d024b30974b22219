import math

import numpy as np
import pytest

from vorpoly import modified, ppp
from vorpoly.modified import ModifiedConfig, build_modified, sub_box_counts, verify_modified_invariants


def _input(cfg, half=10.0, lam=1.0, rep=0):
    return ppp.sample(cfg.aligned_window(half), ppp.IntensityModel.homogeneous(lam), 0, rep)


@pytest.mark.parametrize("n", [8, 16, 32])
def test_invariants_hold(n):
    cfg = ModifiedConfig(n)
    for rep in range(3):
        out = build_modified(_input(cfg, rep=rep), cfg, seed=1)
        rep_ = verify_modified_invariants(out, cfg)
        assert rep_.passed, rep_.failures
        assert rep_.min_count >= 1 and rep_.max_count <= cfg.cap and rep_.tiles_full


def test_cap_rounding():
    assert ModifiedConfig(8).cap == 8
    assert ModifiedConfig(10, 0.5).cap == 10
    assert ModifiedConfig(10, 0.4).cap == math.ceil(10 ** 0.8)


def test_sub_box_counts_against_histogram():
    cfg = ModifiedConfig(16)
    pts = _input(cfg)
    c = sub_box_counts(pts, cfg)
    w = pts.window
    h, _, _ = np.histogram2d(pts.points[:, 0], pts.points[:, 1], bins=c.shape,
                             range=[[w.lo[0], w.hi[0]], [w.lo[1], w.hi[1]]])
    assert np.array_equal(c, h.astype(int))


def test_untouched_sub_boxes_keep_their_points():
    cfg = ModifiedConfig(32)
    pts = _input(cfg, lam=2.0)
    out = build_modified(pts, cfg, seed=3)
    before = sub_box_counts(pts, cfg)
    after = sub_box_counts(out, cfg)
    ok = (before >= 1) & (before <= cfg.cap)
    assert np.array_equal(before[ok], after[ok])
    assert np.all(after[before == 0] == 1)
    assert np.all(after[before > cfg.cap] == cfg.cap)
    # kept points are a subset of the input
    src = {tuple(p) for p in pts.points.tolist()}
    moved = [tuple(p) for p in out.points.tolist() if tuple(p) not in src]
    assert len(moved) == int((before == 0).sum())


def test_tile_order_does_not_matter():
    cfg = ModifiedConfig(16)
    pts = _input(cfg)
    a = build_modified(pts, cfg, 5, order="row")
    for order in ("column", "reverse"):
        assert np.array_equal(a.points, build_modified(pts, cfg, 5, order=order).points)


def test_tile_draws_depend_on_the_tile_only():
    # a larger window over the same tiles gives the same points on them
    cfg = ModifiedConfig(16)
    small = cfg.aligned_window(6.0)
    pts = _input(cfg, half=14.0)
    sub = ppp.PointSet(pts.points[small.contains(pts.points)], small)
    a = build_modified(sub, cfg, 2).points
    b = build_modified(pts, cfg, 2).points
    b = b[small.contains(b)]
    key = lambda x: np.lexsort(x.T[::-1])
    assert np.array_equal(a[key(a)], b[key(b)])


def test_misaligned_window_raises():
    cfg = ModifiedConfig(16)
    pts = ppp.sample(ppp.Window.square(5.0), ppp.IntensityModel.homogeneous(1.0), 0)
    with pytest.raises(modified.MisalignedWindowError):
        build_modified(pts, cfg, 0)


def test_infinite_n_is_identity():
    cfg = ModifiedConfig(math.inf)
    pts = ppp.sample(ppp.Window.square(5.0), ppp.IntensityModel.homogeneous(1.0), 0)
    assert build_modified(pts, cfg, 0) is pts


def test_altered_fraction_matches_poisson():
    cfg = ModifiedConfig(16)
    fr = np.mean([modified.altered_fraction(_input(cfg, half=20.0, rep=r), cfg) for r in range(10)])
    assert abs(fr - modified.altered_probability(1.0, cfg)) < 0.01
