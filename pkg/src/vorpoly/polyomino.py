"""Voronoi polyominoes, their lattice covers, inverse covers and segment
paths.

Searches run on the Delaunay graph around v0, the generator nearest to the
origin.  Minimum and maximum of the cover size over polyominoes of size r
are taken at size exactly r: adding a tile never removes a box, so
min over Pi_{>=r} and max over Pi_{<=r} are both attained there.
"""

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import _search
from .geometry import (CellCache, CensoredError, NearestIndex, Triangulation,
                       boxes_hit_by_cell, delaunay, nearest_generator)
from .lattice import LatticeAnimal, grid_offset

logger = logging.getLogger(__name__)

DEFAULT_EXACT_GUARD = 8
DEFAULT_BEAM = 64


class Tiling:
    """A realization: points, their triangulation and lazily built cells."""

    def __init__(self, points, tri: Optional[Triangulation] = None):
        self.points = points
        self.window = points.window
        self.tri = tri if tri is not None else delaunay(points)
        self.cells = CellCache(self.tri, self.window)
        self._index = NearestIndex(points)
        self._boxes: dict = {}

    @property
    def xy(self) -> np.ndarray:
        return self.tri.points

    @cached_property
    def v0(self) -> int:
        return nearest_generator(self.xy, (0.0, 0.0))

    def nearest(self, x) -> int:
        return self._index.query(x)

    def censored(self, v: int) -> bool:
        return self.cells[v].touches_window_boundary

    def boxes(self, v: int, L: float = 1.0, offset: float = 0.0) -> frozenset:
        """A_L of the cell of v; raises CensoredError for window cells."""
        key = (v, L, offset)
        out = self._boxes.get(key)
        if out is None:
            cell = self.cells[v]
            if cell.touches_window_boundary:
                raise CensoredError(f"cell {v} touches the window")
            out = frozenset(boxes_hit_by_cell(cell, L, offset))
            self._boxes[key] = out
        return out

    @cached_property
    def _unit_box_counts(self) -> dict:
        # B_z = z + [-1/2, 1/2)^2, so the box index is floor(x + 1/2)
        idx = np.floor(self.xy + 0.5).astype(np.int64)
        keys, counts = np.unique(idx, axis=0, return_counts=True)
        return dict(zip(map(tuple, keys.tolist()), counts.tolist()))

    def unit_counts(self, zs) -> dict:
        """N_z for the given lattice sites."""
        table = self._unit_box_counts
        return {tuple(z): table.get(tuple(z), 0) for z in zs}

    def roots_touching_origin_box(self) -> list:
        """Generators whose cells meet B_0, found by a walk from v0."""
        seen = {self.v0}
        stack = [self.v0]
        out = []
        while stack:
            v = stack.pop()
            if (0, 0) in self.boxes(v):
                out.append(v)
                for u in self.tri.neighbors_of(v).tolist():
                    if u not in seen:
                        seen.add(u)
                        stack.append(u)
        return sorted(out)


@dataclass(frozen=True)
class VoronoiPolyomino:
    generators: frozenset

    @property
    def size(self) -> int:
        return len(self.generators)

    def __len__(self) -> int:
        return len(self.generators)

    def is_connected(self, tri: Triangulation) -> bool:
        gens = set(self.generators)
        if not gens:
            return False
        start = next(iter(gens))
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for u in tri.neighbors_of(v).tolist():
                if u in gens and u not in seen:
                    seen.add(u)
                    stack.append(u)
        return len(seen) == len(gens)

    def to_line(self) -> str:
        return " ".join(map(str, sorted(self.generators)))


@dataclass(frozen=True)
class SAPath:
    vertices: tuple

    def __len__(self) -> int:
        return len(self.vertices)

    def is_valid(self, tri: Triangulation) -> bool:
        v = self.vertices
        if len(set(v)) != len(v):
            return False
        return all(tri.has_edge(a, b) for a, b in zip(v, v[1:]))

    def polyomino(self) -> VoronoiPolyomino:
        return VoronoiPolyomino(frozenset(self.vertices))

    def to_line(self) -> str:
        return " ".join(map(str, self.vertices))


def boxes_of(tiling: Tiling, poly, L: float = 1.0, offset: float = 0.0) -> set:
    """A_L(P): union of the covers of the member cells."""
    gens = poly.generators if hasattr(poly, "generators") else poly
    out = set()
    for v in gens:
        out |= tiling.boxes(v, L, offset)
    return out


# ---------------------------------------------------------------------------
# local search graphs
# ---------------------------------------------------------------------------

def _local_graph(tiling: Tiling, root: int, depth: int, exclude=frozenset()):
    """BFS ball of the given hop radius around root, minus ``exclude``.

    Returns (verts, indptr, indices) with verts[0] = root.
    """
    tri = tiling.tri
    verts = [root]
    index = {root: 0}
    frontier = [root]
    for _ in range(depth):
        nxt = []
        for v in frontier:
            for u in tri.neighbors_of(v).tolist():
                if u not in index and u not in exclude:
                    index[u] = len(verts)
                    verts.append(u)
                    nxt.append(u)
        frontier = nxt
    indptr = [0]
    indices = []
    for v in verts:
        for u in tri.neighbors_of(v).tolist():
            j = index.get(u)
            if j is not None:
                indices.append(j)
        indptr.append(len(indices))
    return verts, np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64)


@dataclass(frozen=True)
class Extremes:
    """min/max of the cover size for each size 1..r (index k = size k+1)."""

    mins: np.ndarray
    maxs: np.ndarray
    min_sets: tuple
    max_sets: tuple
    counts: np.ndarray

    def min_at(self, r: int):
        return int(self.mins[r - 1]), self.min_sets[r - 1]

    def max_at(self, r: int):
        return int(self.maxs[r - 1]), self.max_sets[r - 1]


def _merge_extremes(parts) -> Extremes:
    parts = list(parts)
    r = len(parts[0][0])
    mins = np.full(r, np.iinfo(np.int64).max, dtype=np.int64)
    maxs = np.full(r, -1, dtype=np.int64)
    min_sets = [None] * r
    max_sets = [None] * r
    counts = np.zeros(r, dtype=np.int64)
    for pm, pM, ms, Ms, cnt in parts:
        counts += cnt
        for k in range(r):
            if cnt[k] and pm[k] < mins[k]:
                mins[k], min_sets[k] = pm[k], ms[k]
            if cnt[k] and pM[k] > maxs[k]:
                maxs[k], max_sets[k] = pM[k], Ms[k]
    return Extremes(mins, maxs, tuple(min_sets), tuple(max_sets), counts)


def _run_extremes(tiling, root, r, paths, L, offset, exclude=frozenset()):
    verts, indptr, indices = _local_graph(tiling, root, r - 1, exclude)
    sets = [tiling.boxes(v, L, offset) for v in verts]
    masks, _ = _search.pack_masks(sets)
    fn = _search.path_cover_extremes if paths else _search.cover_extremes
    mins, maxs, mset, Mset, counts = fn(indptr, indices, 0, r, masks)
    va = np.asarray(verts)

    def witness(row):
        row = row[row >= 0]
        return tuple(va[row].tolist())

    return (mins, maxs, tuple(witness(mset[k]) for k in range(r)),
            tuple(witness(Mset[k]) for k in range(r)), counts)


def cover_extremes(tiling: Tiling, r: int, touching: bool = False, paths: bool = False,
                   L: float = 1.0, offset: float = 0.0) -> Extremes:
    """Exact min and max of #A_L over polyominoes (or self-avoiding paths)
    of every size up to r containing v0, or, with ``touching``, over
    polyominoes meeting B_0.

    Raises CensoredError if a tile within reach touches the window.
    """
    if r < 1:
        raise ValueError("r >= 1")
    if not touching:
        return _merge_extremes([_run_extremes(tiling, tiling.v0, r, paths, L, offset)])
    roots = tiling.roots_touching_origin_box()
    if paths:
        return _merge_extremes([_run_extremes(tiling, u, r, True, L, offset) for u in roots])
    # each polyomino is counted from its smallest root
    parts = [_run_extremes(tiling, u, r, False, L, offset, frozenset(roots[:i]))
             for i, u in enumerate(roots)]
    return _merge_extremes(parts)


@dataclass(frozen=True)
class SearchResult:
    value: int
    polyomino: VoronoiPolyomino
    exact: bool
    path: Optional[SAPath] = None


def _beam(tiling: Tiling, r: int, sign: int, width: int, touching: bool) -> SearchResult:
    starts = tiling.roots_touching_origin_box() if touching else [tiling.v0]
    beam = {}
    for v in starts:
        beam[frozenset([v])] = tiling.boxes(v)
    for _ in range(r - 1):
        nxt = {}
        for gens, cover in beam.items():
            for v in gens:
                for u in tiling.tri.neighbors_of(v).tolist():
                    if u in gens:
                        continue
                    key = gens | {u}
                    if key not in nxt:
                        nxt[key] = cover | tiling.boxes(u)
        beam = dict(sorted(nxt.items(), key=lambda kv: (sign * len(kv[1]), sorted(kv[0])))[:width])
    gens, cover = min(beam.items(), key=lambda kv: (sign * len(kv[1]), sorted(kv[0])))
    return SearchResult(len(cover), VoronoiPolyomino(gens), False)


def min_boxes_at_size(tiling: Tiling, r: int, exact_guard: int = DEFAULT_EXACT_GUARD,
                      touching: bool = False, beam_width: int = DEFAULT_BEAM) -> SearchResult:
    """min #A(P) over polyominoes of size r containing v0 (exact up to the
    guard, otherwise a beam-search upper bound)."""
    if r > exact_guard:
        return _beam(tiling, r, 1, beam_width, touching)
    val, gens = cover_extremes(tiling, r, touching).min_at(r)
    return SearchResult(val, VoronoiPolyomino(frozenset(gens)), True)


def max_boxes_at_size(tiling: Tiling, r: int, exact_guard: int = DEFAULT_EXACT_GUARD,
                      touching: bool = False, beam_width: int = DEFAULT_BEAM) -> SearchResult:
    """max #A(P) over polyominoes of size r containing v0 (exact up to the
    guard, otherwise a beam-search lower bound)."""
    if r > exact_guard:
        return _beam(tiling, r, -1, beam_width, touching)
    val, gens = cover_extremes(tiling, r, touching).max_at(r)
    return SearchResult(val, VoronoiPolyomino(frozenset(gens)), True)


# ---------------------------------------------------------------------------
# inverse problem
# ---------------------------------------------------------------------------

def inverse_cover(tiling: Tiling, a) -> VoronoiPolyomino:
    """P(A): all generators whose cells meet B_A = union of B_z, z in A."""
    cells = set(a.cells if isinstance(a, LatticeAnimal) else map(tuple, a))
    start = tiling.nearest(next(iter(sorted(cells))))
    seen = {start}
    stack = [start]
    out = set()
    while stack:
        v = stack.pop()
        if tiling.boxes(v) & cells:
            out.add(v)
            for u in tiling.tri.neighbors_of(v).tolist():
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    poly = VoronoiPolyomino(frozenset(out))
    if not poly.is_connected(tiling.tri):
        raise AssertionError("inverse cover is not Delaunay-connected")
    return poly


def inverse_cover_max(tiling: Tiling, s: int) -> np.ndarray:
    """max over animals A in Phi_{<=k} of #P(A), for k = 1..s.

    Each lattice site carries the set of generators whose cells meet it, and
    #P(A) is the size of the union over A, so the cover-extremes kernel on
    the lattice graph gives all maxima in one pass.
    """
    from .lattice import lattice_graph

    sites, indptr, indices = lattice_graph(s - 1, 2)
    wanted = set(map(tuple, sites.tolist()))
    gens_of = {z: set() for z in wanted}
    start = tiling.v0
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        hit = tiling.boxes(v) & wanted
        if hit:
            for z in hit:
                gens_of[z].add(v)
            for u in tiling.tri.neighbors_of(v).tolist():
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    masks, _ = _search.pack_masks([gens_of[tuple(z)] for z in sites.tolist()])
    _, maxs, _, _, _ = _search.cover_extremes(indptr, indices, 0, s, masks)
    return maxs


# ---------------------------------------------------------------------------
# segment paths
# ---------------------------------------------------------------------------

def _on_boundary(tiling: Tiling, x, tol: float = 1e-12) -> bool:
    d = np.sqrt(((tiling.xy - np.asarray(x)) ** 2).sum(axis=1))
    two = np.partition(d, 1)[:2]
    return bool(two[1] - two[0] <= tol * max(1.0, two[1]))


def _general_position(tiling, x, toward):
    x = np.asarray(x, dtype=float)
    if _on_boundary(tiling, x):
        step = np.asarray(toward, dtype=float) - x
        nrm = np.hypot(*step)
        step = step / nrm if nrm > 0 else np.array([1.0, 0.0])
        logger.info("segment endpoint %s on a cell boundary, perturbed by 1e-9", x.tolist())
        x = x + 1e-9 * step
    return x


def segment_path(tiling: Tiling, x, y) -> SAPath:
    """Generators of the tiles crossed by [x, y], in order from v_x to v_y.

    A segment meets a convex tile in one interval, so the crossing sequence
    is already self-avoiding.  At a crossing through a Voronoi vertex the
    next tile is the one the segment enters, i.e. the neighbour whose
    distance difference decreases fastest.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.array_equal(x, y):
        v = tiling.nearest(x)
        if tiling.censored(v):
            raise CensoredError(f"cell {v} touches the window")
        return SAPath((v,))
    x = _general_position(tiling, x, y)
    y = _general_position(tiling, y, x)
    xy = tiling.xy
    dvec = y - x
    v = tiling.nearest(x)
    target = tiling.nearest(y)
    path = [v]
    t_cur = 0.0
    while v != target:
        if tiling.censored(v):
            raise CensoredError(f"cell {v} touches the window")
        best_t = math.inf
        best_u = -1
        best_slope = 0.0
        pv = xy[v]
        for u in tiling.tri.neighbors_of(v).tolist():
            pu = xy[u]
            # f(t) = |p(t) - pu|^2 - |p(t) - pv|^2 along p(t) = x + t d
            f0 = float(((x - pu) ** 2).sum() - ((x - pv) ** 2).sum())
            slope = float(2.0 * np.dot(pv - pu, dvec))
            if slope >= 0.0:
                continue
            t = -f0 / slope
            if t < t_cur - 1e-12:
                continue
            if t < best_t - 1e-12 or (abs(t - best_t) <= 1e-12 and slope < best_slope):
                best_t, best_u, best_slope = t, u, slope
        if best_u < 0 or best_t > 1.0 + 1e-9:
            break
        v = best_u
        t_cur = best_t
        path.append(v)
    if tiling.censored(v):
        raise CensoredError(f"cell {v} touches the window")
    return SAPath(tuple(path))


def tiles_on_segment(tiling: Tiling, x, y, samples: int = 4000) -> list:
    """Generators met by dense sampling along [x, y], in order, deduplicated
    consecutively (a test oracle)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ts = np.linspace(0.0, 1.0, samples)
    pts = x + ts[:, None] * (y - x)
    from scipy.spatial import cKDTree

    _, idx = cKDTree(tiling.xy).query(pts)
    out = [int(idx[0])]
    for i in idx[1:].tolist():
        if i != out[-1]:
            out.append(i)
    return out


def max_segment_path(tiling: Tiling, s: float) -> int:
    """max over |x| <= s of #gamma(0, x).

    Along a ray the count is nondecreasing in |x|, so the maximum is taken on
    the circle |x| = s, where it is piecewise constant in the angle and only
    changes at directions through Voronoi vertices or where the endpoint
    crosses a Voronoi edge; it is evaluated between consecutive critical
    angles.
    """
    origin = np.zeros(2)
    # cells meeting the disk: walk from v0
    start = tiling.v0
    seen = {start}
    stack = [start]
    polys = []
    while stack:
        v = stack.pop()
        cell = tiling.cells[v]
        poly = cell.polygon
        if _dist_to_polygon(origin, poly) <= s:
            if cell.touches_window_boundary:
                raise CensoredError(f"cell {v} touches the window")
            polys.append(poly)
            for u in tiling.tri.neighbors_of(v).tolist():
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
    angles = []
    for poly in polys:
        r = np.hypot(poly[:, 0], poly[:, 1])
        inside = poly[r <= s]
        angles.extend(np.arctan2(inside[:, 1], inside[:, 0]).tolist())
        q = np.roll(poly, -1, axis=0)
        for p0, p1 in zip(poly, q):
            for t in _circle_hits(p0, p1, s):
                pt = p0 + t * (p1 - p0)
                angles.append(math.atan2(pt[1], pt[0]))
    angles = np.unique(np.mod(np.asarray(angles), 2 * math.pi))
    if len(angles) == 0:
        probes = np.array([0.0])
    else:
        nxt = np.append(angles[1:], angles[0] + 2 * math.pi)
        probes = 0.5 * (angles + nxt)
    best = 0
    for th in probes.tolist():
        x = np.array([s * math.cos(th), s * math.sin(th)])
        best = max(best, len(segment_path(tiling, origin, x)))
    return best


def _circle_hits(p0, p1, s):
    d = p1 - p0
    a = float(d @ d)
    if a == 0:
        return []
    b = 2 * float(p0 @ d)
    c = float(p0 @ p0) - s * s
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return [t for t in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)) if 0.0 <= t <= 1.0]


def _dist_to_polygon(x, poly) -> float:
    """Distance from x to a closed convex counterclockwise polygon."""
    q = np.roll(poly, -1, axis=0)
    e = q - poly
    w = x - poly
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    if np.all(cross >= 0):
        return 0.0
    t = np.clip((w * e).sum(axis=1) / np.maximum((e * e).sum(axis=1), 1e-300), 0.0, 1.0)
    proj = poly + t[:, None] * e
    return float(np.sqrt(((proj - x) ** 2).sum(axis=1)).min())


# ---------------------------------------------------------------------------
# invariants
# ---------------------------------------------------------------------------

def sandwich_holds(tiling: Tiling, poly) -> bool:
    """r <= sum of N_z over A(P), with r the number of tiles."""
    cover = boxes_of(tiling, poly)
    counts = tiling.unit_counts(cover)
    return len(poly.generators if hasattr(poly, "generators") else poly) <= sum(counts.values())


def scaling_holds(tiling: Tiling, poly, L: int) -> bool:
    """#A_L <= #A_1 <= L^2 #A_L for blocks aligned with the unit boxes."""
    a1 = len(boxes_of(tiling, poly))
    aL = len(boxes_of(tiling, poly, float(L), grid_offset(L)))
    return aL <= a1 <= L ** 2 * aL
