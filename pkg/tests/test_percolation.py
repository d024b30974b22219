import math

import numpy as np
import pytest
from scipy import ndimage

from vorpoly import percolation
from vorpoly.lattice import LatticeAnimal, animal_index_matrix, closure
from vorpoly.percolation import (SiteField, closed_clusters, cluster_hull, min_open_density,
                                 open_density_at_most, sample_iid)


def test_iid_field_is_consistent_across_boxes():
    a = sample_iid(((-5, -5), (5, 5)), 0.6, 3, 1)
    b = sample_iid(((0, 0), (8, 8)), 0.6, 3, 1)
    for z in [(0, 0), (3, 4), (5, 5)]:
        assert a[z] == b[z]
    big = sample_iid(((-100, -100), (100, 100)), 0.6, 3, 1)
    assert abs(big.values.mean() - 0.6) < 0.01


def test_closed_clusters_match_ndimage():
    f = sample_iid(((-15, -15), (15, 15)), 0.7, 0, 0)
    lab, _ = ndimage.label(f.values == 0)
    ours = percolation.closed_labels(f)
    # same partition of the closed sites
    pairs = {(int(a), int(b)) for a, b in zip(lab[lab > 0], ours[lab > 0])}
    assert len({a for a, _ in pairs}) == len(pairs) == len({b for _, b in pairs})


def test_cluster_hull_by_hand():
    closed = {(0, 0), (1, 0), (1, 1), (5, 5)}
    f = SiteField.from_closed(closed, (-4, -4), (8, 8))
    cs = closed_clusters(f, [(0, 0)])
    assert cs.sizes() == [3]
    hull = cluster_hull(f, [(0, 0)])
    assert hull == closure({(0, 0), (1, 0), (1, 1)})
    with pytest.raises(percolation.TruncatedClusterError):
        closed_clusters(SiteField.from_closed({(0, 0), (1, 0)}, (0, -1), (1, 1)), [(0, 0)])


def test_min_open_density_matches_exhaustive():
    rng = np.random.default_rng(0)
    for s in (1, 3, 5, 6):
        sites, rows = animal_index_matrix(s, exact_size=True)
        for _ in range(5):
            vals = (rng.random(len(sites)) < 0.6).astype(int)
            f = SiteField.from_closed([tuple(c) for c, v in zip(sites.tolist(), vals) if v == 0],
                                      (-(s - 1),) * 2, (s - 1,) * 2)
            brute = min(sum(f[tuple(sites[i])] for i in r if i < len(sites)) for r in rows)
            assert min_open_density(f, s).value == brute
            for r in range(s + 1):
                assert open_density_at_most(f, s, r) == (brute <= r)


def test_lemma2_bounds_are_ordered():
    b = percolation.lemma2_bounds(6, 2, 0.9)
    assert b["animals"] <= b["alpha"] <= b["alpha2"]


def _single_site_mean_f(rho, K, n, seed):
    """E e^{min(#Cl_0, K)} from materialized fields and ndimage labels."""
    tot = 0.0
    for rep in range(n):
        f = sample_iid(((-30, -30), (30, 30)), rho, seed, rep)
        lab, _ = ndimage.label(f.values == 0)
        l0 = lab[30, 30]
        k = int((lab == l0).sum()) if l0 else 0
        tot += math.exp(min(k, K))
    return tot / n


def test_cluster_product_single_site_law():
    rep = percolation.verify_cluster_product(0.8, [(0, 0)], 4, 4000, seed=1)
    oracle = _single_site_mean_f(0.8, 4, 1500, seed=2)
    # both estimate E f(#Cl_0); the sd of f is below 20 here
    assert abs(rep.lhs - oracle) < 1.5
    assert math.isclose(rep.lhs, rep.rhs, rel_tol=1e-12)


def test_cluster_product_inequality_small():
    rep = percolation.verify_cluster_product(0.8, LatticeAnimal.rectangle(2, 2), 4, 5000, seed=0)
    assert rep.passed and rep.truncated == 0
