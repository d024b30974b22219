import math

from hypothesis import given, strategies as st
from scipy.stats import binomtest

from vorpoly import stats
from vorpoly.stats import TailEstimate


def test_wilson_against_reference():
    lo, hi = stats.wilson(30, 200)
    ref = binomtest(30, 200).proportion_ci(method="wilson")
    assert math.isclose(lo, ref.low, abs_tol=1e-3) and math.isclose(hi, ref.high, abs_tol=1e-3)
    lo0, hi0 = stats.wilson(0, 100)
    assert lo0 == 0.0 or lo0 < 1e-12
    assert 0 < hi0 < 0.05


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=1, max_size=6))
def test_merge_is_associative(parts):
    ests = [TailEstimate("t1-min", h, h + m, r=3, s=2, censored=m % 3) for h, m in parts]
    left = ests[0]
    for e in ests[1:]:
        left = left.merge(e)
    right = ests[-1]
    for e in reversed(ests[:-1]):
        right = e.merge(right)
    assert (left.hits, left.n_rep, left.censored) == (right.hits, right.n_rep, right.censored)
    assert stats.merge_all(ests)[0].hits == left.hits


def test_csv_round_trip():
    ests = [TailEstimate("t1-min", 5, 100, r=3, s=2, lam=1.0, L=1.0, bound=0.2),
            TailEstimate("c2-segment", 0, 100, r=4, s=1.5, lam=1.0, L=1.0)]
    back = stats.from_csv(stats.to_csv(ests))
    assert [e.key() for e in back] == [e.key() for e in ests]
    assert stats.to_csv(back) == stats.to_csv(ests)


def test_fit_decay_exact_exponential():
    xs = [1, 2, 3, 4]
    fit = stats.fit_decay(xs, [math.exp(-0.7 * x) for x in xs])
    assert math.isclose(fit.slope, -0.7, rel_tol=1e-12) and fit.r2 > 0.999999


def test_fit_below_resolution():
    assert stats.fit_decay([1, 2, 3], [0.1, 0.0, 0.0]).below_resolution


def test_bound_pass_rule():
    assert TailEstimate("x", 10, 100, bound=0.1).passed
    assert not TailEstimate("x", 50, 100, bound=0.1).passed
    assert TailEstimate("x", 50, 100).passed
