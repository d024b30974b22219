import math

import numpy as np
import pytest

from vorpoly import blocks, ppp
from vorpoly.blocks import BlockConfig, is_full_box
from vorpoly.geometry import CensoredError
from vorpoly.lattice import LatticeAnimal, linf_boundary


def _full_oracle(xy, lo, L, m):
    h, _, _ = np.histogram2d(xy[:, 0], xy[:, 1], bins=m,
                             range=[[lo[0], lo[0] + L], [lo[1], lo[1] + L]])
    return bool((h > 0).all())


def test_full_box_against_histogram():
    cfg = BlockConfig(3.0)
    for rep in range(40):
        pts = ppp.sample(ppp.Window.square(6.0), ppp.IntensityModel.homogeneous(12.0), 0, rep)
        for z in [(0, 0), (1, -1)]:
            assert is_full_box(pts, z, cfg) == _full_oracle(pts.points, cfg.block_lo(z), 3.0, 9)


def test_full_flags_agree_with_scalar():
    cfg = BlockConfig(2.0)
    pts = ppp.sample(cfg.block_window((-2, -2), (2, 2)), ppp.IntensityModel.homogeneous(25.0), 1)
    flags = blocks.full_flags(pts, cfg, (-2, -2), (2, 2))
    for i in range(5):
        for j in range(5):
            assert flags[i, j] == is_full_box(pts, (i - 2, j - 2), cfg)


def test_block_outside_window_raises():
    pts = ppp.sample(ppp.Window.square(1.0), ppp.IntensityModel.homogeneous(1.0), 0)
    with pytest.raises(ValueError):
        is_full_box(pts, (3, 3), BlockConfig(1.0))


def test_exact_and_bound_values():
    # [PAPER] bound m^2 exp(-(L/m)^2), m = 9
    assert math.isclose(blocks.not_full_bound(20.0), 81 * math.exp(-(20 / 9) ** 2))
    assert math.isclose(blocks.not_full_bound(20.0), 0.5805, abs_tol=1e-4)
    assert math.isclose(blocks.not_full_exact(20.0, 1.0), 1 - (1 - math.exp(-(20 / 9) ** 2)) ** 81,
                        rel_tol=1e-12)
    assert blocks.not_full_exact(20.0, 1.0) <= blocks.not_full_bound(20.0)


def test_full_box_probability_small():
    est = blocks.full_box_probability(6.0, 3.0, 4000, seed=2)
    lo, hi = est.ci
    exact = est.extra["exact"]
    assert lo - 0.01 <= exact <= hi + 0.01


def test_block_field_law_marginal():
    L, lam = 9.0, 1.5
    q = blocks.full_probability_exact(L, lam)
    f = blocks.sample_block_field_law(L, lam, ((-40, -40), (40, 40)), 0)
    # P(X = 1) = q^9 by independence of the 9 blocks
    assert abs(f.values.mean() - q ** 9) < 0.02


def test_sample_conditioned_fills_blocks():
    cfg = BlockConfig(2.0)
    a = LatticeAnimal.single()
    window = blocks.confinement_window(a, cfg)
    for rep in range(10):
        pts = blocks.sample_conditioned(window, 1.0, cfg, linf_boundary(a), 0, rep)
        assert all(is_full_box(pts, z, cfg) for z in linf_boundary(a))


def test_confinement_counterexample_without_hypothesis():
    # a sparse pattern: boundary blocks are forced full but with one very
    # far point in the centre, cells stay local, so it is confined
    cfg = BlockConfig(2.0)
    a = LatticeAnimal.single()
    window = blocks.confinement_window(a, cfg)
    pts = blocks.sample_conditioned(window, 5.0, cfg, linf_boundary(a), 3)
    assert blocks.verify_confinement(pts, a, cfg).confined
    # removing the conditioning violates the hypothesis
    bare = ppp.sample(window, ppp.IntensityModel.homogeneous(0.2), 3)
    with pytest.raises(blocks.HypothesisViolated):
        blocks.verify_confinement(bare, a, cfg)
