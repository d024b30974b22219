"""Planar Delaunay triangulation, Voronoi cells and lattice covers of cells.

The triangulation is built by Bowyer-Watson insertion over ghost triangles
(an implicit vertex at infinity closes the convex hull), with exact
predicates from :mod:`vorpoly.predicates`.  Cocircular ties follow
:func:`~vorpoly.predicates.incircle_perturbed`, so the output is unique for
any input in which not all points are collinear.

Voronoi cells are produced by clipping the window rectangle with the
bisector half-planes of each generator's Delaunay neighbours.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from ._accel import kernel
from .predicates import incircle_perturbed, orient2d

logger = logging.getLogger(__name__)

GHOST = -1
# edge labels of cell polygons that lie on the window: left, bottom, right, top
WINDOW_LABELS = (-1, -2, -3, -4)


class DegenerateInputError(ValueError):
    """Raised when the input cannot be triangulated (all points collinear)."""


class DuplicatePointError(ValueError):
    pass


class CensoredError(RuntimeError):
    """An analysed cell touches the simulation window, so its shape is not
    that of the infinite-volume tiling."""


# ---------------------------------------------------------------------------
# Bowyer-Watson kernel
# ---------------------------------------------------------------------------

@kernel
def _between(ax, ay, bx, by, px, py):
    # p collinear with a, b: strictly inside the open segment?
    if ax != bx:
        return (ax < px < bx) or (bx < px < ax)
    return (ay < py < by) or (by < py < ay)


@kernel
def _conflict(tv, t, pts, p):
    a = tv[t, 0]
    b = tv[t, 1]
    c = tv[t, 2]
    px = pts[p, 0]
    py = pts[p, 1]
    if c == -1:
        o = orient2d(pts[a, 0], pts[a, 1], pts[b, 0], pts[b, 1], px, py)
        if o > 0:
            return True
        if o == 0:
            return _between(pts[a, 0], pts[a, 1], pts[b, 0], pts[b, 1], px, py)
        return False
    return incircle_perturbed(pts[a, 0], pts[a, 1], pts[b, 0], pts[b, 1],
                              pts[c, 0], pts[c, 1], px, py) > 0


@kernel
def _slot_of(tv, t, x, y):
    # index of the vertex of t that is neither x nor y
    for k in range(3):
        w = tv[t, k]
        if w != x and w != y:
            return k
    return -1


@kernel
def _new_tri(tv, tn, alive, free, nfree, ntri, a, b, c):
    if nfree > 0:
        nfree -= 1
        t = free[nfree]
    else:
        t = ntri
        ntri += 1
    # keep the ghost vertex in slot 2
    if a == -1:
        a, b, c = b, c, a
    elif b == -1:
        a, b, c = c, a, b
    tv[t, 0] = a
    tv[t, 1] = b
    tv[t, 2] = c
    tn[t, 0] = -1
    tn[t, 1] = -1
    tn[t, 2] = -1
    alive[t] = True
    return t, nfree, ntri


@kernel
def _bowyer_watson(pts, order):
    """Triangulate ``pts`` inserting in ``order``.

    Returns (status, info, tv, tn, alive).  status 0 = ok, 1 = all collinear,
    2 = duplicate point (info = its index).
    """
    n = pts.shape[0]
    cap = 2 * n + 16
    tv = np.full((cap, 3), -2, dtype=np.int64)
    tn = np.full((cap, 3), -1, dtype=np.int64)
    alive = np.zeros(cap, dtype=np.bool_)
    free = np.empty(cap, dtype=np.int64)
    nfree = 0
    ntri = 0

    # seed triangle: first point, next distinct point, first non-collinear point
    i0 = order[0]
    k1 = -1
    for k in range(1, n):
        q = order[k]
        if pts[q, 0] != pts[i0, 0] or pts[q, 1] != pts[i0, 1]:
            k1 = k
            break
        return 2, q, tv, tn, alive
    if k1 < 0:
        return 1, -1, tv, tn, alive
    i1 = order[k1]
    k2 = -1
    for k in range(k1 + 1, n):
        q = order[k]
        if orient2d(pts[i0, 0], pts[i0, 1], pts[i1, 0], pts[i1, 1], pts[q, 0], pts[q, 1]) != 0:
            k2 = k
            break
    if k2 < 0:
        return 1, -1, tv, tn, alive
    i2 = order[k2]
    if orient2d(pts[i0, 0], pts[i0, 1], pts[i1, 0], pts[i1, 1], pts[i2, 0], pts[i2, 1]) < 0:
        i1, i2 = i2, i1
    t0, nfree, ntri = _new_tri(tv, tn, alive, free, nfree, ntri, i0, i1, i2)
    g0, nfree, ntri = _new_tri(tv, tn, alive, free, nfree, ntri, i2, i1, -1)
    g1, nfree, ntri = _new_tri(tv, tn, alive, free, nfree, ntri, i0, i2, -1)
    g2, nfree, ntri = _new_tri(tv, tn, alive, free, nfree, ntri, i1, i0, -1)
    tn[t0, 0] = g0
    tn[t0, 1] = g1
    tn[t0, 2] = g2
    ghosts = (g0, g1, g2)
    for g in ghosts:
        a = tv[g, 0]
        b = tv[g, 1]
        tn[g, 2] = t0
    # ghost-to-ghost links: across edge (b, -1) and (-1, a)
    for g in ghosts:
        a = tv[g, 0]
        b = tv[g, 1]
        for h in ghosts:
            if h == g:
                continue
            if tv[h, 0] == b:  # h = (b, x, -1) shares edge (b, -1)
                tn[g, 0] = h
            if tv[h, 1] == a:  # h = (x, a, -1) shares edge (-1, a)
                tn[g, 1] = h

    stack = np.empty(cap, dtype=np.int64)
    cavity = np.empty(cap, dtype=np.int64)
    mark = np.zeros(cap, dtype=np.int64)  # insertion stamp of cavity membership
    seen = np.zeros(cap, dtype=np.int64)
    be0 = np.empty(cap, dtype=np.int64)
    be1 = np.empty(cap, dtype=np.int64)
    bout = np.empty(cap, dtype=np.int64)
    bdead = np.empty(cap, dtype=np.int64)
    newt = np.empty(cap, dtype=np.int64)
    by_start = np.full(n + 1, -1, dtype=np.int64)
    by_end = np.full(n + 1, -1, dtype=np.int64)

    last = t0
    rot = 0
    for k in range(n):
        if k == 0 or k == k1 or k == k2:
            continue
        p = order[k]
        px = pts[p, 0]
        py = pts[p, 1]
        stamp = k + 1

        # visibility walk
        t = last
        steps = 0
        while True:
            if tv[t, 2] == -1:
                break
            moved = False
            for e in range(3):
                i = (e + rot) % 3
                a = tv[t, (i + 1) % 3]
                b = tv[t, (i + 2) % 3]
                if orient2d(pts[a, 0], pts[a, 1], pts[b, 0], pts[b, 1], px, py) < 0:
                    t = tn[t, i]
                    moved = True
                    break
            rot += 1
            steps += 1
            if not moved:
                break
        if tv[t, 2] != -1:
            for j in range(3):
                w = tv[t, j]
                if pts[w, 0] == px and pts[w, 1] == py:
                    return 2, p, tv, tn, alive
        elif not _conflict(tv, t, pts, p):
            # walked onto a ghost whose edge is collinear with p: scan hull
            found = -1
            for s in range(ntri):
                if alive[s] and _conflict(tv, s, pts, p):
                    found = s
                    break
            t = found

        # grow cavity
        nc = 0
        nb = 0
        sp = 0
        stack[sp] = t
        sp += 1
        mark[t] = stamp
        while sp > 0:
            sp -= 1
            c = stack[sp]
            cavity[nc] = c
            nc += 1
            for i in range(3):
                o = tn[c, i]
                if mark[o] == stamp:
                    continue
                if seen[o] != stamp and _conflict(tv, o, pts, p):
                    mark[o] = stamp
                    stack[sp] = o
                    sp += 1
                else:
                    seen[o] = stamp
                    be0[nb] = tv[c, (i + 1) % 3]
                    be1[nb] = tv[c, (i + 2) % 3]
                    bout[nb] = o
                    bdead[nb] = c
                    nb += 1
        # a neighbour first rejected then reached again is a boundary edge
        # twice; conflicts are decided once per insertion via `seen`
        for j in range(nc):
            c = cavity[j]
            alive[c] = False
            free[nfree] = c
            nfree += 1
        for j in range(nb):
            a = be0[j]
            b = be1[j]
            t, nfree, ntri = _new_tri(tv, tn, alive, free, nfree, ntri, a, b, p)
            newt[j] = t
            o = bout[j]
            tn[t, _slot_of(tv, t, a, b)] = o
            tn[o, _slot_of(tv, o, a, b)] = t
            by_start[a + 1] = t
            by_end[b + 1] = t
        for j in range(nb):
            t = newt[j]
            a = be0[j]
            b = be1[j]
            # edge (b, p) is shared with the new triangle starting at b
            tn[t, _slot_of(tv, t, b, p)] = by_start[b + 1]
            tn[t, _slot_of(tv, t, p, a)] = by_end[a + 1]
            if tv[t, 2] != -1:
                last = t
        for j in range(nb):
            by_start[be0[j] + 1] = -1
            by_end[be1[j] + 1] = -1
    return 0, -1, tv, tn, alive


def _hilbert_order(xy: np.ndarray, bits: int = 16) -> np.ndarray:
    """Indices sorting points along a Hilbert curve (locality for the walk)."""
    lo = xy.min(axis=0)
    span = float(max((xy.max(axis=0) - lo).max(), 1e-300))
    side = 1 << bits
    q = np.minimum(((xy - lo) / span * (side - 1)).astype(np.int64), side - 1)
    x = q[:, 0].copy()
    y = q[:, 1].copy()
    d = np.zeros(len(xy), dtype=np.int64)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = ry == 0
        swap_x = np.where(flip & (rx == 1), s - 1 - x, x)
        swap_y = np.where(flip & (rx == 1), s - 1 - y, y)
        x = np.where(flip, swap_y, swap_x)
        y = np.where(flip, swap_x, swap_y)
        s >>= 1
    return np.argsort(d, kind="stable")


@dataclass(frozen=True)
class Triangulation:
    """Delaunay triangulation of ``points`` (an (n, 2) array).

    ``triangles`` are counterclockwise vertex triples; ``neighbors[t, i]`` is
    the triangle across the edge opposite vertex i, or -1 on the hull.
    """

    points: np.ndarray
    triangles: np.ndarray
    neighbors: np.ndarray
    indptr: np.ndarray = field(repr=False)
    indices: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.points)

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors_of(u) == v))

    def edges(self) -> np.ndarray:
        """Undirected edges as an (m, 2) array with u < v, sorted."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = src < self.indices
        return np.column_stack([src[keep], self.indices[keep]])

    @cached_property
    def adjacency_sets(self) -> list:
        return [frozenset(self.neighbors_of(v).tolist()) for v in range(self.n)]

    @cached_property
    def edge_adjacency(self) -> dict:
        """Map (u, v), u < v, to the one or two triangles carrying the edge."""
        out: dict = {}
        for t, (a, b, c) in enumerate(self.triangles.tolist()):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                out.setdefault(key, []).append(t)
        return {k: tuple(v) for k, v in out.items()}


def delaunay(points) -> Triangulation:
    """Delaunay triangulation of a PointSet or an (n, 2) coordinate array."""
    xy = np.ascontiguousarray(getattr(points, "points", points), dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise ValueError("delaunay expects planar points")
    if len(xy) < 3:
        raise DegenerateInputError("need at least 3 points")
    order = _hilbert_order(xy)
    status, info, tv, tn, alive = _bowyer_watson(xy, order)
    if status == 1:
        raise DegenerateInputError("all points are collinear")
    if status == 2:
        raise DuplicatePointError(f"duplicate point {xy[info].tolist()}")

    ids = np.flatnonzero(alive & (tv[:, 2] >= 0))
    tris = tv[ids]
    remap = np.full(len(tv), -1, dtype=np.int64)
    remap[ids] = np.arange(len(ids))
    nb = tn[ids]
    nbr = np.where(nb >= 0, remap[np.maximum(nb, 0)], -1)
    # neighbours that are ghosts map to -1 as well
    nbr[tv[np.maximum(nb, 0), 2] == GHOST] = -1

    u = np.concatenate([tris[:, 0], tris[:, 1], tris[:, 2]])
    v = np.concatenate([tris[:, 1], tris[:, 2], tris[:, 0]])
    a = np.concatenate([u, v])
    b = np.concatenate([v, u])
    key = np.unique(a * len(xy) + b)
    src = key // len(xy)
    dst = key % len(xy)
    indptr = np.zeros(len(xy) + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return Triangulation(xy, tris, nbr, indptr, dst.astype(np.int64))


# ---------------------------------------------------------------------------
# Voronoi cells
# ---------------------------------------------------------------------------

@kernel
def _clip(xs, ys, labs, m, dx, dy, c, lab):
    """Clip polygon by the half-plane dx*x + dy*y <= c; edge k runs k -> k+1."""
    ox = np.empty(m + 2)
    oy = np.empty(m + 2)
    ol = np.empty(m + 2, dtype=np.int64)
    k = 0
    for i in range(m):
        j = (i + 1) % m
        si = dx * xs[i] + dy * ys[i] - c
        sj = dx * xs[j] + dy * ys[j] - c
        if si <= 0.0:
            ox[k] = xs[i]
            oy[k] = ys[i]
            ol[k] = labs[i]
            k += 1
            if sj > 0.0 and si < 0.0:
                t = si / (si - sj)
                ox[k] = xs[i] + t * (xs[j] - xs[i])
                oy[k] = ys[i] + t * (ys[j] - ys[i])
                ol[k] = lab
                k += 1
            elif sj > 0.0:
                ol[k - 1] = lab
        elif sj <= 0.0:
            if sj < 0.0:
                t = si / (si - sj)
                ox[k] = xs[i] + t * (xs[j] - xs[i])
                oy[k] = ys[i] + t * (ys[j] - ys[i])
                ol[k] = labs[i]
                k += 1
    return ox[:k], oy[:k], ol[:k], k


@kernel
def _cells(pts, indptr, indices, which, lox, loy, hix, hiy):
    """Clip the window by bisectors for each generator in ``which``."""
    total_cap = 0
    for w in range(which.shape[0]):
        v = which[w]
        total_cap += indptr[v + 1] - indptr[v] + 4
    out_x = np.empty(total_cap)
    out_y = np.empty(total_cap)
    out_l = np.empty(total_cap, dtype=np.int64)
    offsets = np.zeros(which.shape[0] + 1, dtype=np.int64)
    pos = 0
    for w in range(which.shape[0]):
        v = which[w]
        xs = np.array([lox, hix, hix, lox])
        ys = np.array([loy, loy, hiy, hiy])
        labs = np.array([-2, -3, -4, -1], dtype=np.int64)
        m = 4
        vx = pts[v, 0]
        vy = pts[v, 1]
        for q in range(indptr[v], indptr[v + 1]):
            u = indices[q]
            dx = pts[u, 0] - vx
            dy = pts[u, 1] - vy
            c = 0.5 * (pts[u, 0] * pts[u, 0] + pts[u, 1] * pts[u, 1] - vx * vx - vy * vy)
            xs, ys, labs, m = _clip(xs, ys, labs, m, dx, dy, c, u)
            if m == 0:
                break
        for i in range(m):
            out_x[pos] = xs[i]
            out_y[pos] = ys[i]
            out_l[pos] = labs[i]
            pos += 1
        offsets[w + 1] = pos
    return out_x[:pos], out_y[:pos], out_l[:pos], offsets


@dataclass(frozen=True)
class VoronoiCell:
    """Window-clipped Voronoi cell; ``polygon`` is convex and counterclockwise.

    ``edge_labels[k]`` names the neighbour whose bisector carries the edge
    from vertex k to vertex k+1, or a negative window side.
    """

    generator: int
    polygon: np.ndarray
    edge_labels: np.ndarray
    touches_window_boundary: bool

    @property
    def area(self) -> float:
        x = self.polygon[:, 0]
        y = self.polygon[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def edge_lengths(self) -> dict:
        """Length of the polygon edge carried by each label."""
        p = self.polygon
        q = np.roll(p, -1, axis=0)
        lengths = np.hypot(*(q - p).T)
        out: dict = {}
        for lab, ln in zip(self.edge_labels.tolist(), lengths.tolist()):
            out[lab] = out.get(lab, 0.0) + ln
        return out

    def shared_neighbors(self, min_length: float = 0.0) -> set:
        return {lab for lab, ln in self.edge_lengths().items() if lab >= 0 and ln > min_length}

    @property
    def bbox(self):
        return self.polygon.min(axis=0), self.polygon.max(axis=0)


def voronoi_cells(tri: Triangulation, window, which=None) -> list:
    """Voronoi cells of ``tri`` clipped to ``window``.

    ``which`` restricts the computation to some generators (all by default).
    """
    lo, hi = _window_bounds(window)
    ids = np.arange(tri.n) if which is None else np.asarray(which, dtype=np.int64).reshape(-1)
    xs, ys, labs, offsets = _cells(tri.points, tri.indptr, tri.indices, ids,
                                   float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
    cells = []
    for w, v in enumerate(ids.tolist()):
        a, b = offsets[w], offsets[w + 1]
        lab = labs[a:b]
        cells.append(VoronoiCell(v, np.column_stack([xs[a:b], ys[a:b]]), lab,
                                 bool(np.any(lab < 0))))
    return cells


def _window_bounds(window):
    if hasattr(window, "lo"):
        return np.asarray(window.lo, float), np.asarray(window.hi, float)
    lo, hi = window
    return np.asarray(lo, float), np.asarray(hi, float)


class CellCache:
    """Lazily computed cells of one triangulation, keyed by generator."""

    def __init__(self, tri: Triangulation, window):
        self.tri = tri
        self.window = window
        self._cells: dict = {}

    def __getitem__(self, v: int) -> VoronoiCell:
        cell = self._cells.get(v)
        if cell is None:
            cell = voronoi_cells(self.tri, self.window, [v])[0]
            self._cells[v] = cell
        return cell

    def many(self, vs) -> list:
        missing = [v for v in vs if v not in self._cells]
        if missing:
            for cell in voronoi_cells(self.tri, self.window, missing):
                self._cells[cell.generator] = cell
        return [self._cells[v] for v in vs]


# ---------------------------------------------------------------------------
# nearest generator
# ---------------------------------------------------------------------------

def _lex_key(p):
    return (float(p[0]), float(p[1]))


def nearest_generator(points, x) -> int:
    """Index of the point nearest to ``x``; exact ties go to the
    lexicographically smallest point."""
    xy = np.asarray(getattr(points, "points", points), dtype=np.float64)
    if len(xy) == 0:
        raise ValueError("empty point set")
    x = np.asarray(x, dtype=np.float64)
    d2 = ((xy - x) ** 2).sum(axis=1)
    best = float(d2.min())
    cand = np.flatnonzero(d2 <= best * (1 + 1e-12) + 1e-300)
    if len(cand) == 1:
        return int(cand[0])
    fx, fy = Fraction(float(x[0])), Fraction(float(x[1]))
    exact = [((Fraction(float(xy[i, 0])) - fx) ** 2 + (Fraction(float(xy[i, 1])) - fy) ** 2, i)
             for i in cand.tolist()]
    m = min(e for e, _ in exact)
    ties = [i for e, i in exact if e == m]
    return min(ties, key=lambda i: _lex_key(xy[i]))


class NearestIndex:
    """Repeated nearest-generator queries backed by a k-d tree."""

    def __init__(self, points):
        from scipy.spatial import cKDTree

        self.xy = np.asarray(getattr(points, "points", points), dtype=np.float64)
        if len(self.xy) == 0:
            raise ValueError("empty point set")
        self._tree = cKDTree(self.xy)

    def query(self, x) -> int:
        k = min(4, len(self.xy))
        d, idx = self._tree.query(np.asarray(x, dtype=np.float64), k=k)
        d = np.atleast_1d(d)
        idx = np.atleast_1d(idx)
        if k == 1 or d[1] > d[0] * (1 + 1e-9) + 1e-300:
            return int(idx[0])
        return nearest_generator(self.xy, x)


# ---------------------------------------------------------------------------
# lattice cover of a cell
# ---------------------------------------------------------------------------

@kernel
def _cover(px, py, side):
    """Integer z with (side*z + side*[-1/2, 1/2)^2) meeting the closed polygon."""
    m = px.shape[0]
    zx0 = int(math.floor(px.min() / side + 0.5))
    zx1 = int(math.floor(px.max() / side + 0.5))
    zy0 = int(math.floor(py.min() / side + 0.5))
    zy1 = int(math.floor(py.max() / side + 0.5))
    out = np.empty(((zx1 - zx0 + 1) * (zy1 - zy0 + 1), 2), dtype=np.int64)
    k = 0
    labs = np.zeros(m, dtype=np.int64)
    for zx in range(zx0, zx1 + 1):
        a = side * (zx - 0.5)
        b = side * (zx + 0.5)
        for zy in range(zy0, zy1 + 1):
            c = side * (zy - 0.5)
            d = side * (zy + 0.5)
            xs, ys, ls, n = _clip(px, py, labs, m, -1.0, 0.0, -a, 0)
            if n > 0:
                xs, ys, ls, n = _clip(xs, ys, ls, n, 1.0, 0.0, b, 0)
            if n > 0:
                xs, ys, ls, n = _clip(xs, ys, ls, n, 0.0, -1.0, -c, 0)
            if n > 0:
                xs, ys, ls, n = _clip(xs, ys, ls, n, 0.0, 1.0, d, 0)
            # half-open box: some point of the clipped piece has x < b, y < d
            if n > 0 and xs.min() < b and ys.min() < d:
                out[k, 0] = zx
                out[k, 1] = zy
                k += 1
    return out[:k]


def boxes_hit_by_cell(cell, box_side: float = 1.0, offset: float = 0.0) -> set:
    """All z with box_side*(z + [-1/2, 1/2)^2) + offset meeting the cell."""
    poly = getattr(cell, "polygon", cell)
    poly = np.asarray(poly, dtype=np.float64) - offset
    if len(poly) == 0:
        return set()
    if len(poly) < 3:
        # a point or segment: rasterize it as a degenerate polygon
        poly = np.vstack([poly, poly[:1]])
    z = _cover(np.ascontiguousarray(poly[:, 0]), np.ascontiguousarray(poly[:, 1]), float(box_side))
    return set(map(tuple, z.tolist()))


# ---------------------------------------------------------------------------
# batch cell / box queries
# ---------------------------------------------------------------------------

def cell_arrays(tri: Triangulation, window, which=None):
    """Raw cell polygons: (xs, ys, labels, offsets, ids); polygon w spans
    offsets[w]:offsets[w+1]."""
    lo, hi = _window_bounds(window)
    ids = np.arange(tri.n) if which is None else np.asarray(which, dtype=np.int64).reshape(-1)
    xs, ys, labs, offsets = _cells(tri.points, tri.indptr, tri.indices, ids,
                                   float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))
    return xs, ys, labs, offsets, ids


@kernel
def _meets_closed_box(px, py, lox, loy, hix, hiy):
    m = px.shape[0]
    if px.max() < lox or px.min() > hix or py.max() < loy or py.min() > hiy:
        return False
    labs = np.zeros(m, dtype=np.int64)
    xs, ys, ls, n = _clip(px, py, labs, m, -1.0, 0.0, -lox, 0)
    if n > 0:
        xs, ys, ls, n = _clip(xs, ys, ls, n, 1.0, 0.0, hix, 0)
    if n > 0:
        xs, ys, ls, n = _clip(xs, ys, ls, n, 0.0, -1.0, -loy, 0)
    if n > 0:
        xs, ys, ls, n = _clip(xs, ys, ls, n, 0.0, 1.0, hiy, 0)
    return n > 0


@kernel
def _polys_meet_boxes(xs, ys, offsets, blo, bhi):
    npoly = offsets.shape[0] - 1
    out = np.zeros(npoly, dtype=np.bool_)
    for w in range(npoly):
        a = offsets[w]
        b = offsets[w + 1]
        if b <= a:
            continue
        px = xs[a:b]
        py = ys[a:b]
        for k in range(blo.shape[0]):
            if _meets_closed_box(px, py, blo[k, 0], blo[k, 1], bhi[k, 0], bhi[k, 1]):
                out[w] = True
                break
    return out


def polygons_meeting_boxes(xs, ys, offsets, box_lo, box_hi) -> np.ndarray:
    """For each polygon, whether it meets one of the closed boxes [lo_k, hi_k]."""
    return _polys_meet_boxes(xs, ys, offsets, np.ascontiguousarray(box_lo, dtype=np.float64),
                             np.ascontiguousarray(box_hi, dtype=np.float64))
