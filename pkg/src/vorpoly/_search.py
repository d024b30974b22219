"""Exhaustive search kernels over small connected structures of a CSR graph.

* :func:`connected_extreme` - Redelmeier enumeration of connected vertex sets
  containing a root, with branch and bound on an additive objective.
* :func:`cover_extremes` - same enumeration, objective = size of the union of
  per-vertex bitsets (the lattice cover of a polyomino); min and max for
  every size up to ``s`` in one pass.
* :func:`path_extreme` / :func:`path_cover_extremes` - the analogues over
  self-avoiding paths starting at the root.

Graphs are given as ``indptr, indices`` (CSR, int64).  All kernels are
iterative so they compile under numba.
"""

import numpy as np

from ._accel import kernel

INF = 1e300


@kernel
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@kernel
def _popcount_row(row):
    c = 0
    for i in range(row.shape[0]):
        c += _popcount64(row[i])
    return c


@kernel
def connected_extreme(indptr, indices, root, s, cost, bound):
    """Minimum of sum(cost) over connected sets of exactly ``s`` vertices
    containing ``root``.

    Only sets with value strictly below ``bound`` are reported; returns
    (value, members) with value = ``bound`` and an empty member array when
    none exists.  Pruning uses value >= partial + (s - size) * min(cost), so
    the result is exact for any sign of the costs.
    """
    n = indptr.shape[0] - 1
    maxdeg = 0
    cmin = INF
    for v in range(n):
        d = indptr[v + 1] - indptr[v]
        if d > maxdeg:
            maxdeg = d
        if cost[v] < cmin:
            cmin = cost[v]
    if cmin > 0.0:
        cmin = 0.0 if s > 1 else cmin
    cap = 1 + s * maxdeg
    untried = np.empty((s, cap), dtype=np.int64)
    ulen = np.zeros(s, dtype=np.int64)
    marked = np.empty((s, cap), dtype=np.int64)
    mlen = np.zeros(s, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    sub = np.empty(s, dtype=np.int64)
    partial = np.zeros(s + 1)
    best = bound
    best_set = np.empty(0, dtype=np.int64)

    untried[0, 0] = root
    ulen[0] = 1
    marked[0, 0] = root
    mlen[0] = 1
    seen[root] = True
    level = 0
    while level >= 0:
        if ulen[level] == 0:
            for i in range(mlen[level]):
                seen[marked[level, i]] = False
            level -= 1
            continue
        ulen[level] -= 1
        w = untried[level, ulen[level]]
        sub[level] = w
        val = partial[level] + cost[w]
        partial[level + 1] = val
        size = level + 1
        if val + (s - size) * min(cmin, 0.0) >= best:
            continue
        if size == s:
            best = val
            best_set = sub[:s].copy()
            continue
        nl = level + 1
        for i in range(ulen[level]):
            untried[nl, i] = untried[level, i]
        ulen[nl] = ulen[level]
        mlen[nl] = 0
        for q in range(indptr[w], indptr[w + 1]):
            u = indices[q]
            if not seen[u]:
                seen[u] = True
                untried[nl, ulen[nl]] = u
                ulen[nl] += 1
                marked[nl, mlen[nl]] = u
                mlen[nl] += 1
        level = nl
    return best, best_set


@kernel
def cover_extremes(indptr, indices, root, s, masks):
    """Min and max of popcount(OR of masks) over connected sets containing
    ``root``, for every size 1..s.

    Returns (mins, maxs, min_sets, max_sets, counts); row k of the set
    arrays holds a witness of size k+1 (padded with -1) and ``counts[k]`` the
    number of connected sets of size k+1.
    """
    n = indptr.shape[0] - 1
    words = masks.shape[1]
    maxdeg = 0
    for v in range(n):
        d = indptr[v + 1] - indptr[v]
        if d > maxdeg:
            maxdeg = d
    cap = 1 + s * maxdeg
    untried = np.empty((s, cap), dtype=np.int64)
    ulen = np.zeros(s, dtype=np.int64)
    marked = np.empty((s, cap), dtype=np.int64)
    mlen = np.zeros(s, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    sub = np.empty(s, dtype=np.int64)
    acc = np.zeros((s + 1, words), dtype=np.uint64)
    mins = np.full(s, 1 << 60, dtype=np.int64)
    maxs = np.full(s, -1, dtype=np.int64)
    min_sets = np.full((s, s), -1, dtype=np.int64)
    max_sets = np.full((s, s), -1, dtype=np.int64)
    counts = np.zeros(s, dtype=np.int64)

    untried[0, 0] = root
    ulen[0] = 1
    marked[0, 0] = root
    mlen[0] = 1
    seen[root] = True
    level = 0
    while level >= 0:
        if ulen[level] == 0:
            for i in range(mlen[level]):
                seen[marked[level, i]] = False
            level -= 1
            continue
        ulen[level] -= 1
        w = untried[level, ulen[level]]
        sub[level] = w
        for j in range(words):
            acc[level + 1, j] = acc[level, j] | masks[w, j]
        c = _popcount_row(acc[level + 1])
        size = level + 1
        counts[level] += 1
        if c < mins[level]:
            mins[level] = c
            for i in range(size):
                min_sets[level, i] = sub[i]
        if c > maxs[level]:
            maxs[level] = c
            for i in range(size):
                max_sets[level, i] = sub[i]
        if size == s:
            continue
        nl = level + 1
        for i in range(ulen[level]):
            untried[nl, i] = untried[level, i]
        ulen[nl] = ulen[level]
        mlen[nl] = 0
        for q in range(indptr[w], indptr[w + 1]):
            u = indices[q]
            if not seen[u]:
                seen[u] = True
                untried[nl, ulen[nl]] = u
                ulen[nl] += 1
                marked[nl, mlen[nl]] = u
                mlen[nl] += 1
        level = nl
    return mins, maxs, min_sets, max_sets, counts


@kernel
def path_extreme(indptr, indices, edge_cost, root, r, bound):
    """Minimum of the summed edge costs over self-avoiding paths of exactly
    ``r`` vertices starting at ``root``; ``edge_cost`` is aligned with
    ``indices``.  Costs must be nonnegative.  Returns (value, path) with
    value = ``bound`` when no path beats it.
    """
    n = indptr.shape[0] - 1
    on_path = np.zeros(n, dtype=np.bool_)
    path = np.empty(r, dtype=np.int64)
    nxt = np.empty(r, dtype=np.int64)  # next CSR slot to try at each depth
    partial = np.zeros(r + 1)
    best = bound
    best_path = np.empty(0, dtype=np.int64)
    path[0] = root
    on_path[root] = True
    nxt[0] = indptr[root]
    depth = 0
    if r == 1:
        if 0.0 < bound:
            return 0.0, path[:1].copy()
        return bound, best_path
    while depth >= 0:
        v = path[depth]
        q = nxt[depth]
        if q >= indptr[v + 1]:
            on_path[v] = False
            depth -= 1
            continue
        nxt[depth] = q + 1
        u = indices[q]
        if on_path[u]:
            continue
        val = partial[depth] + edge_cost[q]
        if val >= best:
            continue
        if depth + 2 == r:
            best = val
            best_path = np.empty(r, dtype=np.int64)
            for i in range(depth + 1):
                best_path[i] = path[i]
            best_path[r - 1] = u
            continue
        depth += 1
        path[depth] = u
        partial[depth] = val
        on_path[u] = True
        nxt[depth] = indptr[u]
    return best, best_path


@kernel
def path_cover_extremes(indptr, indices, root, r, masks):
    """:func:`cover_extremes` over self-avoiding paths from ``root``."""
    n = indptr.shape[0] - 1
    words = masks.shape[1]
    on_path = np.zeros(n, dtype=np.bool_)
    path = np.empty(r, dtype=np.int64)
    nxt = np.empty(r, dtype=np.int64)
    acc = np.zeros((r, words), dtype=np.uint64)
    mins = np.full(r, 1 << 60, dtype=np.int64)
    maxs = np.full(r, -1, dtype=np.int64)
    min_sets = np.full((r, r), -1, dtype=np.int64)
    max_sets = np.full((r, r), -1, dtype=np.int64)
    counts = np.zeros(r, dtype=np.int64)
    path[0] = root
    on_path[root] = True
    nxt[0] = indptr[root]
    for j in range(words):
        acc[0, j] = masks[root, j]
    c = _popcount_row(acc[0])
    mins[0] = c
    maxs[0] = c
    min_sets[0, 0] = root
    max_sets[0, 0] = root
    counts[0] = 1
    depth = 0
    if r == 1:
        return mins, maxs, min_sets, max_sets, counts
    while depth >= 0:
        v = path[depth]
        q = nxt[depth]
        if q >= indptr[v + 1]:
            on_path[v] = False
            depth -= 1
            continue
        nxt[depth] = q + 1
        u = indices[q]
        if on_path[u]:
            continue
        d1 = depth + 1
        path[d1] = u
        for j in range(words):
            acc[d1, j] = acc[depth, j] | masks[u, j]
        c = _popcount_row(acc[d1])
        counts[d1] += 1
        if c < mins[d1]:
            mins[d1] = c
            for i in range(d1 + 1):
                min_sets[d1, i] = path[i]
        if c > maxs[d1]:
            maxs[d1] = c
            for i in range(d1 + 1):
                max_sets[d1, i] = path[i]
        if d1 + 1 < r:
            depth = d1
            on_path[u] = True
            nxt[depth] = indptr[u]
    return mins, maxs, min_sets, max_sets, counts


def pack_masks(sets, universe=None):
    """Bitsets (uint64 words) for a list of hashable-element sets.

    Returns (masks, universe) where universe maps element -> bit index.
    """
    if universe is None:
        universe = {}
        for st in sets:
            for e in st:
                if e not in universe:
                    universe[e] = len(universe)
    words = max(1, (len(universe) + 63) // 64)
    masks = np.zeros((len(sets), words), dtype=np.uint64)
    for i, st in enumerate(sets):
        for e in st:
            b = universe[e]
            masks[i, b >> 6] |= np.uint64(1) << np.uint64(b & 63)
    return masks, universe
