"""Bernoulli rewards on Delaunay edges, minimal path rewards and good boxes.

tau_e is 1 with probability p.  The minimal reward over self-avoiding paths
of at least r vertices from v0 is attained at exactly r vertices because
rewards are nonnegative.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _search
from . import rng as _rng
from .blocks import BlockConfig, is_full_box
from .geometry import CensoredError, Triangulation, polygons_meeting_boxes
from .percolation import SiteField
from .polyomino import SAPath, Tiling, boxes_of

logger = logging.getLogger(__name__)

DEFAULT_EXACT_GUARD = 10
DEFAULT_BEAM = 64


@dataclass(frozen=True, eq=False)
class EdgeField:
    """tau on the undirected edges of ``tri`` (rows of ``tri.edges()``)."""

    tri: Triangulation
    tau: np.ndarray
    p: float

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=np.uint8)
        if tau.shape != (len(self.edges),):
            raise ValueError("one value per Delaunay edge")
        object.__setattr__(self, "tau", tau)

    @property
    def edges(self) -> np.ndarray:
        return _edges(self.tri)

    def _keys(self):
        e = self.edges
        return e[:, 0] * self.tri.n + e[:, 1]

    def lookup(self, u, v) -> np.ndarray:
        """tau of the edges (u[i], v[i]) (vectorized; edges must exist)."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        k = np.minimum(u, v) * self.tri.n + np.maximum(u, v)
        keys = self._keys()
        i = np.searchsorted(keys, k)
        if np.any(i >= len(keys)) or np.any(keys[np.minimum(i, len(keys) - 1)] != k):
            raise KeyError("not a Delaunay edge")
        return self.tau[i]

    def __getitem__(self, uv) -> int:
        return int(self.lookup([uv[0]], [uv[1]])[0])

    def csr_costs(self) -> np.ndarray:
        """tau aligned with ``tri.indices``."""
        src = np.repeat(np.arange(self.tri.n), np.diff(self.tri.indptr))
        return self.lookup(src, self.tri.indices)

    def with_values(self, pairs) -> "EdgeField":
        """Copy with tau overridden on the given {(u, v): value} items."""
        tau = self.tau.copy()
        keys = self._keys()
        for (u, v), val in dict(pairs).items():
            tau[np.searchsorted(keys, min(u, v) * self.tri.n + max(u, v))] = val
        return EdgeField(self.tri, tau, self.p)

    def to_text(self) -> str:
        return "".join(f"{u},{v},{t}\n" for (u, v), t in zip(self.edges.tolist(), self.tau.tolist()))


def _edges(tri: Triangulation) -> np.ndarray:
    e = tri.__dict__.get("_edges_cache")
    if e is None:
        e = tri.edges()
        object.__setattr__(tri, "_edges_cache", e)
    return e


def sample_edges(tri: Triangulation, p: float, seed: int, replicate: int = 0) -> EdgeField:
    """i.i.d. Bernoulli(p) rewards, one per Delaunay edge."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    gen = _rng.stream(seed, replicate, _rng.EDGES)
    tau = (gen.random(len(_edges(tri))) < p).astype(np.uint8)
    return EdgeField(tri, tau, p)


def constant_edges(tri: Triangulation, value: int) -> EdgeField:
    return EdgeField(tri, np.full(len(_edges(tri)), value, dtype=np.uint8), float(value))


# ---------------------------------------------------------------------------
# minimal path reward
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RewardResult:
    value: int
    path: SAPath
    exact: bool


def _local(tiling: Tiling, field: EdgeField, r: int):
    tri = tiling.tri
    root = tiling.v0
    verts = [root]
    index = {root: 0}
    frontier = [root]
    for _ in range(r - 1):
        nxt = []
        for v in frontier:
            for u in tri.neighbors_of(v).tolist():
                if u not in index:
                    index[u] = len(verts)
                    verts.append(u)
                    nxt.append(u)
        frontier = nxt
    for v in verts:
        if tiling.censored(v):
            raise CensoredError(f"cell {v} touches the window")
    va = np.asarray(verts, dtype=np.int64)
    indptr = [0]
    src, dst = [], []
    for i, v in enumerate(verts):
        for u in tri.neighbors_of(v).tolist():
            j = index.get(u)
            if j is not None:
                src.append(v)
                dst.append(j)
        indptr.append(len(dst))
    dst = np.asarray(dst, dtype=np.int64)
    cost = field.lookup(np.asarray(src, dtype=np.int64), va[dst]).astype(np.float64)
    return va, np.asarray(indptr, dtype=np.int64), dst, cost


def min_path_reward(tiling: Tiling, field: EdgeField, r: int,
                    exact_guard: int = DEFAULT_EXACT_GUARD, beam_width: int = DEFAULT_BEAM) -> RewardResult:
    """min over self-avoiding paths from v0 with r vertices of the summed
    rewards (exact up to the guard, otherwise a beam-search upper bound)."""
    if r < 2:
        raise ValueError("r >= 2")
    va, indptr, indices, cost = _local(tiling, field, r)
    if r > exact_guard:
        return _beam(va, indptr, indices, cost, r, beam_width)
    val, path = _search.path_extreme(indptr, indices, cost, 0, r, float(r))
    return RewardResult(int(round(val)), SAPath(tuple(va[path].tolist())), True)


def _beam(va, indptr, indices, cost, r, width) -> RewardResult:
    beam = [(0.0, (0,))]
    for _ in range(r - 1):
        nxt = {}
        for val, path in beam:
            on = set(path)
            v = path[-1]
            for q in range(indptr[v], indptr[v + 1]):
                u = int(indices[q])
                if u in on:
                    continue
                cand = (val + cost[q], path + (u,))
                if cand[1] not in nxt or cand[0] < nxt[cand[1]]:
                    nxt[cand[1]] = cand[0]
        beam = sorted(((v, p) for p, v in nxt.items()))[:width]
        if not beam:
            raise RuntimeError("no self-avoiding path of the requested size")
    val, path = beam[0]
    return RewardResult(int(round(val)), SAPath(tuple(va[list(path)].tolist())), False)


def exhaustive_min_reward(tiling: Tiling, field: EdgeField, r: int) -> int:
    """Plain recursive enumeration of all self-avoiding paths (test oracle)."""
    tri = tiling.tri
    best = [r]

    def rec(path, val):
        if len(path) == r:
            best[0] = min(best[0], val)
            return
        v = path[-1]
        for u in tri.neighbors_of(v).tolist():
            if u not in path:
                rec(path + [u], val + field[(v, u)])

    rec([tiling.v0], 0)
    return best[0]


# ---------------------------------------------------------------------------
# good boxes
# ---------------------------------------------------------------------------

@dataclass
class _AnnulusGeometry:
    verts: np.ndarray        # generators whose tiles meet the closed outer box
    inner_bd: np.ndarray     # tile meets the boundary of B^{1/2}
    outer_bd: np.ndarray     # tile meets the boundary of B^{3/2}
    in_annulus: np.ndarray   # generator lies in B^{3/2} minus B^{1/2}


def _box(z, L, s):
    c = L * np.asarray(z, dtype=float)
    return c - s * L, c + s * L


def _meets_boundary(xs, ys, offsets, lo, hi) -> np.ndarray:
    """Tile meets the boundary of the closed box [lo, hi]: it meets the box
    and is not inside its interior (convexity)."""
    meets = polygons_meeting_boxes(xs, ys, offsets, lo[None, :], hi[None, :])
    inside = np.empty(len(offsets) - 1, dtype=bool)
    for i in range(len(offsets) - 1):
        a, b = offsets[i], offsets[i + 1]
        inside[i] = (np.all(xs[a:b] > lo[0]) and np.all(xs[a:b] < hi[0])
                     and np.all(ys[a:b] > lo[1]) and np.all(ys[a:b] < hi[1]))
    return meets & ~inside


def _annulus(tiling: Tiling, z, L: float) -> _AnnulusGeometry:
    olo, ohi = _box(z, L, 1.5)
    ilo, ihi = _box(z, L, 0.5)
    start = tiling.nearest(L * np.asarray(z, dtype=float))
    seen = {start}
    stack = [start]
    keep = []
    while stack:
        v = stack.pop()
        poly = tiling.cells[v].polygon
        hit = polygons_meeting_boxes(np.ascontiguousarray(poly[:, 0]), np.ascontiguousarray(poly[:, 1]),
                                     np.array([0, len(poly)], dtype=np.int64),
                                     olo[None, :], ohi[None, :])[0]
        if not hit:
            continue
        if tiling.censored(v):
            raise CensoredError(f"cell {v} touches the window")
        keep.append(v)
        for u in tiling.tri.neighbors_of(v).tolist():
            if u not in seen:
                seen.add(u)
                stack.append(u)
    keep.sort()
    polys = [tiling.cells[v].polygon for v in keep]
    xs = np.ascontiguousarray(np.concatenate([p[:, 0] for p in polys]))
    ys = np.ascontiguousarray(np.concatenate([p[:, 1] for p in polys]))
    offsets = np.concatenate([[0], np.cumsum([len(p) for p in polys])]).astype(np.int64)
    g = tiling.xy[keep]
    in_outer = np.all((g >= olo) & (g <= ohi), axis=1)
    in_inner = np.all((g >= ilo) & (g <= ihi), axis=1)
    return _AnnulusGeometry(np.asarray(keep, dtype=np.int64),
                            _meets_boundary(xs, ys, offsets, ilo, ihi),
                            _meets_boundary(xs, ys, offsets, olo, ohi),
                            in_outer & ~in_inner)


def zero_crossing_exists(tiling: Tiling, field: EdgeField, z, L: float) -> bool:
    """Whether some path of Gamma_z^L has zero total reward.

    Such a path starts at a tile meeting the inner boundary, ends at a tile
    meeting the outer boundary and has every intermediate generator in the
    annulus; a zero-reward one exists iff the end set is reachable from the
    start set along tau = 0 edges through annulus generators.
    """
    geo = _annulus(tiling, z, L)
    pos = {int(v): i for i, v in enumerate(geo.verts)}
    start = [i for i in range(len(geo.verts)) if geo.inner_bd[i]]
    if any(geo.outer_bd[i] for i in start):
        return True
    seen = set(start)
    frontier = list(start)
    while frontier:
        nxt = []
        for i in frontier:
            v = int(geo.verts[i])
            nb = tiling.tri.neighbors_of(v)
            taus = field.lookup(np.full(len(nb), v), nb)
            for u, t in zip(nb.tolist(), taus.tolist()):
                j = pos.get(u)
                if t or j is None or j in seen:
                    continue
                if geo.outer_bd[j]:
                    return True
                if geo.in_annulus[j]:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    return False


def crossing_paths(tiling: Tiling, z, L: float, limit: int = 200000):
    """All paths of Gamma_z^L (small L only; raises past ``limit``)."""
    geo = _annulus(tiling, z, L)
    pos = {int(v): i for i, v in enumerate(geo.verts)}
    out = []

    def rec(path):
        if len(out) > limit:
            raise RuntimeError("too many annulus paths")
        i = pos[path[-1]]
        if geo.outer_bd[i]:
            out.append(tuple(path))
        if len(path) > 1 and not geo.in_annulus[i]:
            return
        if len(path) == 1 or geo.in_annulus[i]:
            for u in tiling.tri.neighbors_of(path[-1]).tolist():
                if u in pos and u not in path:
                    rec(path + [u])

    for i in range(len(geo.verts)):
        if geo.inner_bd[i]:
            rec([int(geo.verts[i])])
    return out


def path_reward(field: EdgeField, path) -> int:
    path = list(path)
    if len(path) < 2:
        return 0
    return int(field.lookup(path[:-1], path[1:]).sum())


def is_good_box(tiling: Tiling, field: EdgeField, z, L: float) -> bool:
    """(N, tau)-good: the 5 x 5 blocks around z are full, and no path of
    Gamma_z^L has zero reward."""
    cfg = BlockConfig(L)
    for dz in itertools.product(range(-2, 3), repeat=2):
        if not is_full_box(tiling.points, np.add(z, dz), cfg):
            return False
    return not zero_crossing_exists(tiling, field, z, L)


def good_box_field_Z(tiling: Tiling, field: EdgeField, L: float, region) -> SiteField:
    lo, hi = (np.asarray(v, dtype=np.int64) for v in region)
    shape = tuple((hi - lo + 1).tolist())
    vals = np.zeros(shape, dtype=np.uint8)
    for idx in np.ndindex(*shape):
        vals[idx] = is_good_box(tiling, field, lo + np.asarray(idx), L)
    return SiteField(vals, tuple(lo.tolist()), k=5, meta={"L": L})


# ---------------------------------------------------------------------------
# disjoint pieces
# ---------------------------------------------------------------------------

def _contains_crossing(path, geo: _AnnulusGeometry) -> bool:
    pos = {int(v): i for i, v in enumerate(geo.verts)}
    idx = [pos.get(v) for v in path]
    for seq in (idx, idx[::-1]):
        for a in range(len(seq)):
            if seq[a] is None or not geo.inner_bd[seq[a]]:
                continue
            for b in range(a, len(seq)):
                j = seq[b]
                if j is None:
                    break
                if geo.outer_bd[j]:
                    return True
                if b > a and not geo.in_annulus[j]:
                    break
    return False


def disjoint_pieces_holds(tiling: Tiling, field: EdgeField, path, L: float,
                          z_field: Optional[SiteField] = None) -> bool:
    """sum of tau over the path >= largest mod-4 class of the good boxes of
    A_L(path) that the path crosses.

    Boxes in one residue class mod 4 are at l_inf distance >= 4, their outer
    annuli are disjoint, and each crossing of a good annulus costs at least
    one unit of reward.
    """
    path = tuple(path)
    cover = boxes_of(tiling, path, float(L))
    classes: dict = {}
    for z in cover:
        if z_field is not None and z_field.covers(z):
            good = bool(z_field[z])
        else:
            good = is_good_box(tiling, field, z, L)
        if not good or not _contains_crossing(path, _annulus(tiling, z, L)):
            continue
        key = (z[0] % 4, z[1] % 4)
        classes[key] = classes.get(key, 0) + 1
    need = max(classes.values(), default=0)
    return path_reward(field, path) >= need


def good_box_probability(tiling_factory, L: float, q0: float, z=(0, 0), replicates: int = 100,
                         seed: int = 0) -> float:
    """Fraction of replicates where B_z^{1/2,L} is good with P(tau = 0) = q0.

    ``tiling_factory(replicate)`` returns a Tiling whose window covers the
    3/2-box with margin.
    """
    good = 0
    for k in range(replicates):
        t = tiling_factory(k)
        f = sample_edges(t.tri, 1.0 - q0, seed, k)
        good += is_good_box(t, f, z, L)
    return good / replicates
