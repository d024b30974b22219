from fractions import Fraction

import numpy as np
from hypothesis import given, settings, strategies as st

from vorpoly.predicates import incircle, incircle_perturbed, orient2d


def _sign(v):
    return (v > 0) - (v < 0)


def orient_oracle(a, b, c):
    a, b, c = [tuple(map(Fraction, p)) for p in (a, b, c)]
    return _sign((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]))


def incircle_oracle(a, b, c, d):
    rows = []
    for p in (a, b, c):
        dx, dy = Fraction(p[0]) - Fraction(d[0]), Fraction(p[1]) - Fraction(d[1])
        rows.append((dx, dy, dx * dx + dy * dy))
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = rows
    det = a1 * (b2 * c3 - b3 * c2) - a2 * (b1 * c3 - b3 * c1) + a3 * (b1 * c2 - b2 * c1)
    return _sign(det)


# expansion arithmetic is exact only without underflow, so tiny nonzero
# magnitudes are excluded; coordinates of sampled points never get there
coord = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False).filter(
    lambda v: v == 0.0 or abs(v) > 1e-30)
# near-degenerate inputs: small integer lattices plus half-ulp nudges
grid = st.integers(-4, 4).map(float)
pt = st.tuples(coord, coord)


@settings(max_examples=300, deadline=None)
@given(pt, pt, pt)
def test_orient2d_matches_rational(a, b, c):
    assert orient2d(*a, *b, *c) == orient_oracle(a, b, c)


@settings(max_examples=300, deadline=None)
@given(pt, pt, pt, pt)
def test_incircle_matches_rational(a, b, c, d):
    assert incircle(*a, *b, *c, *d) == incircle_oracle(a, b, c, d)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(grid, grid), min_size=4, max_size=4), st.integers(-2, 2))
def test_incircle_on_cocircular_lattices(pts, nudge):
    a, b, c, d = pts
    d = (d[0] + nudge * 2.0 ** -50, d[1])
    assert incircle(*a, *b, *c, *d) == incircle_oracle(a, b, c, d)


def test_near_degenerate_orientation():
    # points nearly on the line y = x, where the naive formula fails
    rng = np.random.default_rng(0)
    for _ in range(2000):
        t = rng.random(3) * 1e-3 + 0.5
        a, b = (0.5, 0.5), (12.0, 12.0)
        c = (t[0], t[0] + np.nextafter(0, 1) * rng.integers(-3, 4))
        assert orient2d(*a, *b, *c) == orient_oracle(a, b, c)


def test_cocircular_square():
    sq = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    assert incircle(*sq[0], *sq[1], *sq[2], *sq[3]) == 0
    # the lexicographically smallest point counts as inside
    assert incircle_perturbed(*sq[1], *sq[2], *sq[3], *sq[0]) == 1
    assert incircle_perturbed(*sq[0], *sq[1], *sq[2], *sq[3]) == -1
