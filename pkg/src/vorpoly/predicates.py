"""Exact orientation and in-circle tests on double coordinates.

A cheap floating-point evaluation is accepted when it clears a forward error
bound; otherwise the determinant is recomputed exactly with error-free
expansion arithmetic (Dekker/Knuth two-sum and two-product).  All functions
are numba kernels and run unchanged as Python when numba is disabled.

Sign conventions: ``orient2d(a, b, c) > 0`` iff a, b, c turn counterclockwise;
``incircle(a, b, c, d) > 0`` iff d lies strictly inside the circle through the
counterclockwise triangle a, b, c.
"""

import numpy as np

from ._accel import kernel

_EPS = 2.0 ** -53
_SPLITTER = 134217729.0  # 2^27 + 1
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS
_EXPANSION_CAP = 2048


@kernel
def _two_sum(a, b):
    x = a + b
    bv = x - a
    av = x - bv
    return x, (a - av) + (b - bv)


@kernel
def _split(a):
    c = _SPLITTER * a
    big = c - a
    hi = c - big
    return hi, a - hi


@kernel
def _two_prod(a, b):
    x = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = x - ahi * bhi
    err -= alo * bhi
    err -= ahi * blo
    return x, alo * blo - err


@kernel
def _grow(e, elen, b, h):
    # h := e + b, zero components dropped; returns length of h
    q = b
    hlen = 0
    for i in range(elen):
        q, hh = _two_sum(q, e[i])
        if hh != 0.0:
            h[hlen] = hh
            hlen += 1
    if q != 0.0 or hlen == 0:
        h[hlen] = q
        hlen += 1
    return hlen


@kernel
def _add(e, elen, f, flen, h):
    # h := e + f by repeated growth (lengths here are tiny)
    tmp = np.empty(elen + flen + 1)
    cur = np.empty(elen + flen + 1)
    for i in range(elen):
        cur[i] = e[i]
    clen = elen
    for j in range(flen):
        clen = _grow(cur, clen, f[j], tmp)
        for i in range(clen):
            cur[i] = tmp[i]
    for i in range(clen):
        h[i] = cur[i]
    return clen


@kernel
def _scale(e, elen, b, h):
    hlen = 0
    bhi, blo = _split(b)
    q, hh = _two_prod(e[0], b)
    if hh != 0.0:
        h[hlen] = hh
        hlen += 1
    for i in range(1, elen):
        p1 = e[i] * b
        ahi, alo = _split(e[i])
        err = p1 - ahi * bhi
        err -= alo * bhi
        err -= ahi * blo
        p0 = alo * blo - err
        s, hh = _two_sum(q, p0)
        if hh != 0.0:
            h[hlen] = hh
            hlen += 1
        q, hh = _two_sum(p1, s)
        # fast two-sum is valid here: |p1| >= |s|
        if hh != 0.0:
            h[hlen] = hh
            hlen += 1
    if q != 0.0 or hlen == 0:
        h[hlen] = q
        hlen += 1
    return hlen


@kernel
def _mul(e, elen, f, flen, h):
    acc = np.zeros(2 * elen * flen + 1)
    alen = 1
    part = np.empty(2 * elen + 1)
    tmp = np.empty(2 * elen * flen + 1)
    for j in range(flen):
        plen = _scale(e, elen, f[j], part)
        alen = _add(acc, alen, part, plen, tmp)
        for i in range(alen):
            acc[i] = tmp[i]
    for i in range(alen):
        h[i] = acc[i]
    return alen


@kernel
def _diff2(a, b, h):
    x, y = _two_sum(a, -b)
    if y == 0.0:
        h[0] = x
        return 1
    h[0] = y
    h[1] = x
    return 2


@kernel
def _sign(e, elen):
    for i in range(elen - 1, -1, -1):
        if e[i] > 0.0:
            return 1
        if e[i] < 0.0:
            return -1
    return 0


@kernel
def _cross_exact(ux, uxl, uy, uyl, vx, vxl, vy, vyl, out):
    # out := ux*vy - uy*vx
    p = np.empty(2 * uxl * vyl + 1)
    q = np.empty(2 * uyl * vxl + 1)
    plen = _mul(ux, uxl, vy, vyl, p)
    qlen = _mul(uy, uyl, vx, vxl, q)
    for i in range(qlen):
        q[i] = -q[i]
    return _add(p, plen, q, qlen, out)


@kernel
def orient2d_exact(ax, ay, bx, by, cx, cy):
    acx = np.empty(2)
    acy = np.empty(2)
    bcx = np.empty(2)
    bcy = np.empty(2)
    l1 = _diff2(ax, cx, acx)
    l2 = _diff2(ay, cy, acy)
    l3 = _diff2(bx, cx, bcx)
    l4 = _diff2(by, cy, bcy)
    out = np.empty(64)
    n = _cross_exact(acx, l1, acy, l2, bcx, l3, bcy, l4, out)
    return _sign(out, n)


@kernel
def orient2d(ax, ay, bx, by, cx, cy):
    """Sign of the orientation determinant of (a, b, c), exact."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > CCW_ERRBOUND * detsum:
        return 1 if det > 0.0 else -1
    return orient2d_exact(ax, ay, bx, by, cx, cy)


@kernel
def incircle_exact(ax, ay, bx, by, cx, cy, dx, dy):
    adx = np.empty(2)
    ady = np.empty(2)
    bdx = np.empty(2)
    bdy = np.empty(2)
    cdx = np.empty(2)
    cdy = np.empty(2)
    la = _diff2(ax, dx, adx)
    lb = _diff2(ay, dy, ady)
    lc = _diff2(bx, dx, bdx)
    ld = _diff2(by, dy, bdy)
    le = _diff2(cx, dx, cdx)
    lf = _diff2(cy, dy, cdy)

    total = np.zeros(_EXPANSION_CAP)
    tlen = 1
    tmp = np.empty(_EXPANSION_CAP)
    sq1 = np.empty(16)
    sq2 = np.empty(16)
    lift = np.empty(32)
    cross = np.empty(32)
    term = np.empty(_EXPANSION_CAP)
    for k in range(3):
        if k == 0:
            px, pxl, py, pyl = adx, la, ady, lb
            ux, uxl, uy, uyl = bdx, lc, bdy, ld
            vx, vxl, vy, vyl = cdx, le, cdy, lf
        elif k == 1:
            px, pxl, py, pyl = bdx, lc, bdy, ld
            ux, uxl, uy, uyl = cdx, le, cdy, lf
            vx, vxl, vy, vyl = adx, la, ady, lb
        else:
            px, pxl, py, pyl = cdx, le, cdy, lf
            ux, uxl, uy, uyl = adx, la, ady, lb
            vx, vxl, vy, vyl = bdx, lc, bdy, ld
        n1 = _mul(px, pxl, px, pxl, sq1)
        n2 = _mul(py, pyl, py, pyl, sq2)
        nl = _add(sq1, n1, sq2, n2, lift)
        nc = _cross_exact(ux, uxl, uy, uyl, vx, vxl, vy, vyl, cross)
        nt = _mul(lift, nl, cross, nc, term)
        tlen = _add(total, tlen, term, nt, tmp)
        for i in range(tlen):
            total[i] = tmp[i]
    return _sign(total, tlen)


@kernel
def incircle(ax, ay, bx, by, cx, cy, dx, dy):
    """Sign of the in-circle determinant, exact (0 on cocircular input)."""
    adx = ax - dx
    bdx = bx - dx
    cdx = cx - dx
    ady = ay - dy
    bdy = by - dy
    cdy = cy - dy
    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady
    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy
    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdxcdy - cdxbdy)
           + blift * (cdxady - adxcdy)
           + clift * (adxbdy - bdxady))
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * alift
                 + (abs(cdxady) + abs(adxcdy)) * blift
                 + (abs(adxbdy) + abs(bdxady)) * clift)
    if abs(det) > ICC_ERRBOUND * permanent:
        return 1 if det > 0.0 else -1
    return incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


@kernel
def _lex_less(ax, ay, bx, by):
    return ax < bx or (ax == bx and ay < by)


@kernel
def incircle_perturbed(ax, ay, bx, by, cx, cy, dx, dy):
    """In-circle sign with cocircular ties broken symbolically.

    The lifted coordinate x^2 + y^2 of each point is lowered by eps^(1+rank),
    rank being the lexicographic (x, then y) position among the four points.
    The lexicographically smallest point therefore counts as inside the
    circle of the other three, so a cocircular quadruple is split by the
    diagonal incident to its smallest vertex.  Never returns 0 for four
    distinct points of which some three are not collinear.
    """
    s = incircle(ax, ay, bx, by, cx, cy, dx, dy)
    if s != 0:
        return s
    xs = np.array([ax, bx, cx, dx])
    ys = np.array([ay, by, cy, dy])
    order = np.zeros(4, dtype=np.int64)
    for i in range(4):
        order[i] = i
    for i in range(1, 4):  # insertion sort, lexicographic
        j = i
        while j > 0 and _lex_less(xs[order[j]], ys[order[j]], xs[order[j - 1]], ys[order[j - 1]]):
            t = order[j]
            order[j] = order[j - 1]
            order[j - 1] = t
            j -= 1
    for r in range(4):
        i = order[r]
        # d(det)/d(lift_i) as a signed orientation of the other three points
        if i == 0:
            g = orient2d(bx, by, cx, cy, dx, dy)
        elif i == 1:
            g = -orient2d(ax, ay, cx, cy, dx, dy)
        elif i == 2:
            g = orient2d(ax, ay, bx, by, dx, dy)
        else:
            g = -orient2d(ax, ay, bx, by, cx, cy)
        if g != 0:
            return -g
    return 0
