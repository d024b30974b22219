import numpy as np
import pytest

from vorpoly import bondperc, ppp
from vorpoly.bondperc import (constant_edges, crossing_paths, disjoint_pieces_holds, is_good_box,
                              min_path_reward, path_reward, sample_edges, zero_crossing_exists)
from vorpoly.polyomino import Tiling

from .conftest import poisson_points


def test_edge_field_lookup_and_text(tiling12):
    f = sample_edges(tiling12.tri, 0.5, 0)
    e = f.edges
    assert np.array_equal(f.lookup(e[:, 1], e[:, 0]), f.tau)
    assert f.to_text().count("\n") == len(e)
    g = f.with_values({(int(e[0, 1]), int(e[0, 0])): 1 - int(f.tau[0])})
    assert g.tau[0] != f.tau[0] and np.array_equal(g.tau[1:], f.tau[1:])
    with pytest.raises(KeyError):
        f[(0, 0)]


def test_sampled_rewards_have_rate_p(tiling12):
    f = sample_edges(tiling12.tri, 0.3, 1)
    assert abs(f.tau.mean() - 0.3) < 0.04


@pytest.mark.parametrize("r", [2, 4, 6])
def test_min_reward_matches_exhaustive(tiling12, r):
    for rep in range(4):
        f = sample_edges(tiling12.tri, 0.6, 2, rep)
        res = min_path_reward(tiling12, f, r)
        assert res.exact and res.value == bondperc.exhaustive_min_reward(tiling12, f, r)
        assert res.path.is_valid(tiling12.tri) and len(res.path) == r
        assert path_reward(f, res.path.vertices) == res.value


def test_constant_rewards(tiling12):
    assert min_path_reward(tiling12, constant_edges(tiling12.tri, 1), 7).value == 6
    assert min_path_reward(tiling12, constant_edges(tiling12.tri, 0), 7).value == 0


def test_beam_is_an_upper_bound(tiling12):
    f = sample_edges(tiling12.tri, 0.7, 3)
    exact = min_path_reward(tiling12, f, 8)
    beam = min_path_reward(tiling12, f, 8, exact_guard=4)
    assert not beam.exact and beam.value >= exact.value


def test_zero_crossing_matches_path_enumeration():
    t = Tiling(poisson_points(8.0, seed=3))
    for rep in range(15):
        f = sample_edges(t.tri, 0.55, 4, rep)
        paths = crossing_paths(t, (0, 0), 1.0)
        oracle = any(path_reward(f, p) == 0 for p in paths)
        assert zero_crossing_exists(t, f, (0, 0), 1.0) == oracle


def _jittered_grid(half, spacing, seed):
    xs = np.arange(-half + spacing / 2, half, spacing)
    g = np.array([(x, y) for x in xs for y in xs])
    g = g + np.random.default_rng(seed).uniform(-0.2, 0.2, g.shape) * spacing
    return Tiling(ppp.PointSet(g, ppp.Window.square(half)))


def test_good_box_extremes():
    t = _jittered_grid(7.0, 0.1, 0)
    assert is_good_box(t, constant_edges(t.tri, 1), (0, 0), 2.0)
    assert not is_good_box(t, constant_edges(t.tri, 0), (0, 0), 2.0)


def test_good_box_needs_full_blocks():
    t = Tiling(poisson_points(9.0, seed=1))
    assert not is_good_box(t, constant_edges(t.tri, 1), (0, 0), 2.0)


def test_disjoint_pieces_on_random_paths():
    t = _jittered_grid(7.0, 0.25, 1)
    rng = np.random.default_rng(0)
    f = sample_edges(t.tri, 0.8, 5)
    for _ in range(5):
        path = [t.nearest((0, 0))]
        while len(path) < 20:
            nb = [u for u in t.tri.neighbors_of(path[-1]).tolist() if u not in path]
            if not nb:
                break
            nxt = max(nb, key=lambda u: t.xy[u, 0] + rng.normal(0, 0.1))
            path.append(nxt)
        assert disjoint_pieces_holds(t, f, path, 1.0)
