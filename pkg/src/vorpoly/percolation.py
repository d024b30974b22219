"""Site fields on Z^d, closed clusters, cluster hulls, open-density minima
and Monte Carlo checks of the cluster-product and k-dependent density
inequalities.

A site is open when its value is 1 and closed when it is 0.  i.i.d. fields
are hashed per site (see :mod:`vorpoly.rng`), so a replicate's field is
defined on all of Z^d and can be materialized on a box or explored lazily.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _search
from . import rng as _rng
from ._accel import kernel
from .lattice import (DEFAULT_EXACT_GUARD, LatticeAnimal, alpha_bound, closure,
                      count_animals_containing_origin, lattice_graph)
from .stats import LemmaRow, TailEstimate

DEFAULT_PAD = 50
P_BAR = 0.99


class TruncatedClusterError(RuntimeError):
    """A closed cluster reached the edge of the sampled region."""


@dataclass(frozen=True, eq=False)
class SiteField:
    """0/1 values on the lattice box ``origin + [0, shape)``.

    ``k`` is the declared dependence radius (0 for i.i.d.) and ``rho_floor``
    a lower bound on P(open) (the parameter itself for i.i.d. fields).
    """

    values: np.ndarray
    origin: tuple
    k: int = 0
    rho_floor: float = math.nan
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.uint8)
        if v.ndim not in (2, 3):
            raise ValueError("site fields live in d = 2 or 3")
        if np.any(v > 1):
            raise ValueError("site values are 0 or 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", tuple(int(o) for o in self.origin))

    @classmethod
    def from_closed(cls, closed, lo, hi, **kw) -> "SiteField":
        """Field on the box lo..hi (inclusive), closed exactly on ``closed``."""
        lo = np.asarray(lo, dtype=np.int64)
        v = np.ones(tuple(np.asarray(hi) - lo + 1), dtype=np.uint8)
        for z in closed:
            v[tuple(np.subtract(z, lo))] = 0
        return cls(v, tuple(lo), **kw)

    @property
    def d(self) -> int:
        return self.values.ndim

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.origin)

    @property
    def hi(self) -> np.ndarray:
        return self.lo + np.asarray(self.values.shape) - 1

    def covers(self, z) -> bool:
        idx = np.subtract(z, self.origin)
        return bool(np.all(idx >= 0) and np.all(idx < self.values.shape))

    def __getitem__(self, z) -> int:
        if not self.covers(z):
            raise KeyError(f"site {tuple(z)} outside the field")
        return int(self.values[tuple(np.subtract(z, self.origin))])

    def closed_sites(self) -> set:
        return {tuple(int(a) for a in idx + self.lo) for idx in np.argwhere(self.values == 0)}

    def with_closed(self, sites) -> "SiteField":
        v = self.values.copy()
        for z in sites:
            v[tuple(np.subtract(z, self.origin))] = 0
        return SiteField(v, self.origin, self.k, self.rho_floor)


def _box_coords(lo, hi) -> np.ndarray:
    axes = [np.arange(a, b + 1) for a, b in zip(lo, hi)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def sample_iid(region, rho: float, seed: int, replicate: int = 0) -> SiteField:
    """i.i.d. Bernoulli(rho) field on the box region = (lo, hi), inclusive."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    lo, hi = (np.asarray(b, dtype=np.int64) for b in region)
    key = _rng.key64(seed, replicate, _rng.SITES)
    u = _rng.site_uniforms(key, _box_coords(lo, hi))
    vals = (u < rho).astype(np.uint8).reshape(tuple(hi - lo + 1))
    return SiteField(vals, tuple(lo), 0, rho, {"seed": seed, "replicate": replicate})


# ---------------------------------------------------------------------------
# clusters
# ---------------------------------------------------------------------------

@kernel
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@kernel
def _closed_labels(closed, shape):
    """Union-find labels of the closed sites of a flattened C-order box.

    Returns an int64 array: -1 on open sites, otherwise the smallest flat
    index of the site's cluster.
    """
    n = closed.shape[0]
    d = shape.shape[0]
    strides = np.ones(d, dtype=np.int64)
    for a in range(d - 2, -1, -1):
        strides[a] = strides[a + 1] * shape[a + 1]
    parent = np.arange(n)
    for i in range(n):
        if not closed[i]:
            continue
        rem = i
        for a in range(d):
            c = rem // strides[a]
            rem -= c * strides[a]
            if c + 1 < shape[a]:
                j = i + strides[a]
                if closed[j]:
                    ri = _find(parent, i)
                    rj = _find(parent, j)
                    if ri != rj:
                        if ri < rj:
                            parent[rj] = ri
                        else:
                            parent[ri] = rj
    out = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if closed[i]:
            out[i] = _find(parent, i)
    return out


def closed_labels(field: SiteField) -> np.ndarray:
    """Cluster label per site (-1 for open sites), shaped like the field."""
    closed = np.ascontiguousarray(field.values.reshape(-1) == 0)
    lab = _closed_labels(closed, np.asarray(field.values.shape, dtype=np.int64))
    return lab.reshape(field.values.shape)


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple
    site_to_cluster: dict

    def __len__(self) -> int:
        return len(self.clusters)

    def sizes(self) -> list:
        return [len(c) for c in self.clusters]


def closed_clusters(field: SiteField, a) -> ClusterSet:
    """The closed clusters meeting A.

    Raises TruncatedClusterError when one of them touches the edge of the
    field's box, since its true extent is then unknown.
    """
    cells = a.cells if isinstance(a, LatticeAnimal) else tuple(map(tuple, a))
    for z in cells:
        if not field.covers(z):
            raise ValueError(f"site {z} of A lies outside the field")
    lab = closed_labels(field)
    shape = np.asarray(field.values.shape)
    wanted = []
    for z in cells:
        l = lab[tuple(np.subtract(z, field.origin))]
        if l >= 0 and l not in wanted:
            wanted.append(int(l))
    clusters = []
    index = {}
    for l in wanted:
        idx = np.argwhere(lab == l)
        if np.any(idx == 0) or np.any(idx == shape - 1):
            raise TruncatedClusterError("closed cluster reaches the region boundary")
        members = tuple(map(tuple, (idx + field.lo).tolist()))
        for z in members:
            index[z] = len(clusters)
        clusters.append(LatticeAnimal(members))
    return ClusterSet(tuple(clusters), index)


def cluster_hull(field: SiteField, a) -> set:
    """Cl(A): the closure of A plus the closures of the closed clusters meeting A."""
    hull = closure(a)
    for cl in closed_clusters(field, a).clusters:
        hull |= closure(cl)
    return hull


# ---------------------------------------------------------------------------
# open-density minimum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityResult:
    value: int
    animal: LatticeAnimal
    exact: bool


def _origin_costs(field: SiteField, s: int):
    sites, indptr, indices = lattice_graph(s - 1, field.d)
    cost = np.array([field[tuple(c)] for c in sites.tolist()], dtype=np.float64)
    return sites, indptr, indices, cost


def min_open_density(field: SiteField, s: int, exact_guard: int = DEFAULT_EXACT_GUARD) -> DensityResult:
    """min over Phi_{>=s} of the number of open sites in A.

    Values are nonnegative, so the minimum is attained at #A = s.  Exact
    branch and bound for s <= exact_guard; above it a greedy growth that
    always absorbs a cheapest frontier site (an upper bound).
    """
    if s < 1:
        raise ValueError("s >= 1")
    if s > exact_guard:
        return _greedy_min(field, s)
    sites, indptr, indices, cost = _origin_costs(field, s)
    val, members = _search.connected_extreme(indptr, indices, 0, s, cost, s + 1.0)
    return DensityResult(int(round(val)), LatticeAnimal(tuple(map(tuple, sites[members].tolist()))), True)


def open_density_at_most(field: SiteField, s: int, r: int) -> bool:
    """Exact decision of min_{Phi_{>=s}} sum Y <= r (no size guard; the
    search is pruned as soon as a partial animal holds r + 1 open sites)."""
    sites, indptr, indices, cost = _origin_costs(field, s)
    val, _ = _search.connected_extreme(indptr, indices, 0, s, cost, r + 1.0)
    return val <= r


def _greedy_min(field: SiteField, s: int) -> DensityResult:
    d = field.d
    origin = (0,) * d
    cells = {origin}
    total = field[origin]
    steps = [tuple(int(i == a) * sg for i in range(d)) for a in range(d) for sg in (1, -1)]
    while len(cells) < s:
        frontier = {tuple(x + e for x, e in zip(c, st)) for c in cells for st in steps} - cells
        best = min(frontier, key=lambda z: (field[z], z))
        cells.add(best)
        total += field[best]
    return DensityResult(int(total), LatticeAnimal(tuple(cells)), False)


def lemma2_bounds(s: int, r: int, rho: float, d: int = 2) -> dict:
    """The chain of bounds on P(min_{Phi>=s} sum Y <= r) from the counting
    argument, tightest first.

    ``animals``: #Phi_{=s} times the exact binomial probability of at least
    s - r closed sites among s; ``alpha``: alpha^s C(s, r) (1-rho)^(s-r);
    ``alpha2``: (2 alpha)^s (1-rho)^(s-r); ``sqrt``: (2 alpha sqrt(1-rho))^s
    (valid for s >= 2r); ``exp``: e^{-s}, reached when 2 alpha sqrt(1-rho) < 1/e.
    """
    from scipy.stats import binom

    q = 1.0 - rho
    a = alpha_bound(d)
    out = {}
    try:
        counts = count_animals_containing_origin(s, d)
        n_s = int(counts[-1] - (counts[-2] if s > 1 else 0))
        out["animals"] = n_s * float(binom.sf(s - r - 1, s, q))
    except Exception:  # beyond the enumeration guard
        out["animals"] = math.nan
    out["alpha"] = a ** s * math.comb(s, r) * q ** (s - r)
    out["alpha2"] = (2 * a) ** s * q ** (s - r)
    out["sqrt"] = (2 * a * math.sqrt(q)) ** s
    out["exp"] = math.exp(-s)
    out["regime"] = 2 * a * math.sqrt(q) < math.exp(-1) and s >= 2 * r
    return out


# ---------------------------------------------------------------------------
# lazily explored i.i.d. clusters (Monte Carlo kernels)
# ---------------------------------------------------------------------------

@kernel
def _cluster_sizes(key, rho, ax, ay, radius, sizes, cap):
    """Sizes of the closed clusters of the hashed field meeting the sites
    (ax[i], ay[i]); cluster i is reported at the first site of A it contains
    (sizes of later sites of the same cluster are 0, open sites 0).

    Returns False if some cluster leaves the box [-radius, radius]^2.
    """
    na = ax.shape[0]
    side = 2 * radius + 1
    state = np.zeros(side * side, dtype=np.int8)  # 0 unknown, 1 open, 2 closed-unvisited, 3 visited
    touched = np.empty(cap, dtype=np.int64)
    ntouched = 0
    stack = np.empty(cap, dtype=np.int64)
    ok = True
    for i in range(na):
        sizes[i] = 0
    for i in range(na):
        x0 = ax[i]
        y0 = ay[i]
        idx0 = (x0 + radius) * side + (y0 + radius)
        if state[idx0] == 0:
            u = _rng.site_uniform(key, x0, y0, 0)
            state[idx0] = 1 if u < rho else 2
            touched[ntouched] = idx0
            ntouched += 1
        if state[idx0] != 2:
            continue
        state[idx0] = 3
        top = 0
        stack[top] = idx0
        top += 1
        count = 0
        while top > 0:
            top -= 1
            cur = stack[top]
            count += 1
            cx = cur // side - radius
            cy = cur % side - radius
            for k in range(4):
                nx = cx + (1 if k == 0 else -1 if k == 1 else 0)
                ny = cy + (1 if k == 2 else -1 if k == 3 else 0)
                if nx < -radius or nx > radius or ny < -radius or ny > radius:
                    ok = False
                    continue
                j = (nx + radius) * side + (ny + radius)
                if state[j] == 0:
                    u = _rng.site_uniform(key, nx, ny, 0)
                    state[j] = 1 if u < rho else 2
                    if ntouched < cap:
                        touched[ntouched] = j
                        ntouched += 1
                if state[j] == 2:
                    state[j] = 3
                    if top >= cap:
                        return False
                    stack[top] = j
                    top += 1
            if not ok:
                break
        sizes[i] = count
        if not ok:
            break
    return ok


@kernel
def _cluster_product_batch(base_key, rho, ax, ay, radius, cap_k, n_rep, first_rep, lhs, mean_f):
    """Per replicate: prod_{Cl meeting A} f(#Cl) and mean over A of f(#Cl_x),
    f(k) = exp(min(k, cap_k)).  Truncated replicates get NaN."""
    na = ax.shape[0]
    sizes = np.zeros(na, dtype=np.int64)
    first = np.zeros(na, dtype=np.int64)
    cap = (2 * radius + 1) * (2 * radius + 1)
    for t in range(n_rep):
        key = _rng.replicate_key(base_key, first_rep + t)
        ok = _cluster_sizes(key, rho, ax, ay, radius, sizes, cap)
        if not ok:
            lhs[t] = np.nan
            mean_f[t] = np.nan
            continue
        logp = 0.0
        for i in range(na):
            if sizes[i] > 0:
                logp += min(sizes[i], cap_k)
        lhs[t] = math.exp(logp)
        # per-site cluster sizes: rerun each site alone (clusters are tiny)
        acc = 0.0
        for i in range(na):
            one_x = ax[i:i + 1]
            one_y = ay[i:i + 1]
            _cluster_sizes(key, rho, one_x, one_y, radius, first[i:i + 1], cap)
            acc += math.exp(min(first[i], cap_k))
        mean_f[t] = acc / na
    return lhs, mean_f


@dataclass(frozen=True)
class ClusterProductReport:
    rho: float
    animal: LatticeAnimal
    cap_k: int
    n: int
    truncated: int
    lhs: float
    rhs: float
    lhs_ci: tuple
    rhs_ci: tuple
    sigma: float
    max_cluster: int = 0

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + 3 * self.sigma


def verify_cluster_product(rho: float, a, cap_k: int, replicates: int, seed: int = 0,
                           pad: int = DEFAULT_PAD) -> ClusterProductReport:
    """Monte Carlo check of E prod f(#Cl) <= (E f(#Cl_0))^{#A} for
    f(k) = e^{min(k, K)}.

    Both sides come from the same replicates: the right-hand mean uses, for
    each replicate, the average of f(#Cl_x) over x in A (each term has the law
    of f(#Cl_0) by translation invariance).  sigma is the delta-method
    standard error of LHS - RHS.
    """
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    a = a if isinstance(a, LatticeAnimal) else LatticeAnimal(tuple(map(tuple, a)))
    if a.d != 2:
        raise ValueError("the Monte Carlo kernel is two-dimensional")
    arr = a.array()
    radius = int(np.abs(arr).max()) + pad
    base = np.uint64(_rng.key64(seed, 0, _rng.SITES))
    lhs = np.empty(replicates)
    mf = np.empty(replicates)
    _cluster_product_batch(base, float(rho), np.ascontiguousarray(arr[:, 0]),
                           np.ascontiguousarray(arr[:, 1]), radius, int(cap_k),
                           int(replicates), 0, lhs, mf)
    ok = ~np.isnan(lhs)
    lhs, mf = lhs[ok], mf[ok]
    n = len(lhs)
    k = len(a)
    L = float(lhs.mean())
    m = float(mf.mean())
    R = m ** k
    dlt = lhs - k * m ** (k - 1) * mf
    sigma = float(dlt.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se_l = float(lhs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se_m = float(mf.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    se_r = k * m ** (k - 1) * se_m
    return ClusterProductReport(rho, a, cap_k, n, int((~ok).sum()), L, R,
                                (L - 1.96 * se_l, L + 1.96 * se_l),
                                (R - 1.96 * se_r, R + 1.96 * se_r), sigma)


# ---------------------------------------------------------------------------
# k-dependent fields: open-density tail
# ---------------------------------------------------------------------------

def block_density_check(sample_field: Callable, s: int, r: int, replicates: int,
                        seed: int = 0, p_bar: float = P_BAR, label: str = "lemma5") -> TailEstimate:
    """P(min_{Phi>=s} sum X <= r) for fields drawn by ``sample_field(seed, rep)``,
    tallied against e^{-s}.

    The sampler must return a SiteField covering the l1 ball of radius s - 1.
    Marginals are estimated from the sampled sites and reported in
    ``extra['p_marginal']``; a value below ``p_bar`` is flagged in
    ``extra['below_p_bar']`` since the bound is only claimed above it.
    """
    hits = 0
    opened = 0
    seen = 0
    k = 0
    for rep in range(replicates):
        f = sample_field(seed, rep)
        k = f.k
        opened += int(f.values.sum())
        seen += f.values.size
        hits += open_density_at_most(f, s, r)
    p_marg = opened / seen if seen else math.nan
    return TailEstimate(label, hits, replicates, d=2, s=s, r=r, bound=math.exp(-s),
                        extra={"p_marginal": p_marg, "below_p_bar": p_marg < p_bar, "k": k})


def lemma2_row(rho: float, s: int, r: int, replicates: int, seed: int = 0, bound_key: str = "animals") -> LemmaRow:
    """Empirical P(min_{Phi>=s} sum Y <= r) on i.i.d. fields against one term
    of :func:`lemma2_bounds`."""
    lo, hi = (-(s - 1),) * 2, (s - 1,) * 2
    hits = sum(open_density_at_most(sample_iid((lo, hi), rho, seed, rep), s, r)
               for rep in range(replicates))
    return LemmaRow("lemma2", 2, rho, s, r, int(hits), replicates, lemma2_bounds(s, r, rho)[bound_key])
