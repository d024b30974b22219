"""Lattice animals on Z^d: enumeration, boundaries, box unions and greedy
animals with Poisson weights.

An animal is a finite set of integer vectors connected under l1
nearest-neighbour adjacency.  Cells are stored as a sorted tuple of tuples,
which doubles as the canonical form.
"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

import numpy as np

from . import _search

# tractability guards for the exhaustive enumeration
ENUM_GUARD = {1: 16, 2: 8, 3: 5}
DEFAULT_EXACT_GUARD = 7
DEFAULT_BEAM = 64


class CapacityError(ValueError):
    """Requested enumeration is beyond the tractability guard."""


def _unit_steps(d: int):
    steps = []
    for i in range(d):
        for sgn in (1, -1):
            e = [0] * d
            e[i] = sgn
            steps.append(tuple(e))
    return steps


def _connected(cells: set) -> bool:
    if not cells:
        return False
    start = next(iter(cells))
    d = len(start)
    steps = _unit_steps(d)
    seen = {start}
    stack = [start]
    while stack:
        c = stack.pop()
        for e in steps:
            n = tuple(a + b for a, b in zip(c, e))
            if n in cells and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(cells)


@dataclass(frozen=True)
class LatticeAnimal:
    cells: tuple

    def __post_init__(self):
        cells = tuple(sorted({tuple(int(v) for v in c) for c in self.cells}))
        if not cells:
            raise ValueError("an animal has at least one cell")
        if len({len(c) for c in cells}) != 1:
            raise ValueError("mixed dimensions")
        if not _connected(set(cells)):
            raise ValueError("cells are not l1-connected")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def single(cls, z=(0, 0)) -> "LatticeAnimal":
        return cls((tuple(z),))

    @classmethod
    def rectangle(cls, w: int, h: int, corner=(0, 0)) -> "LatticeAnimal":
        x0, y0 = corner
        return cls(tuple((x0 + i, y0 + j) for i in range(w) for j in range(h)))

    @property
    def d(self) -> int:
        return len(self.cells[0])

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, z) -> bool:
        return tuple(z) in self.as_set()

    def __iter__(self):
        return iter(self.cells)

    def as_set(self) -> frozenset:
        return frozenset(self.cells)

    def array(self) -> np.ndarray:
        return np.array(self.cells, dtype=np.int64)

    def translate(self, shift) -> "LatticeAnimal":
        return LatticeAnimal(tuple(tuple(a + b for a, b in zip(c, shift)) for c in self.cells))

    def to_line(self) -> str:
        return "".join(",".join(map(str, c)) + ";" for c in self.cells)

    @classmethod
    def from_line(cls, line: str) -> "LatticeAnimal":
        toks = [t for t in line.strip().split(";") if t]
        return cls(tuple(tuple(int(v) for v in t.split(",")) for t in toks))


def dump_animals(animals: Iterable[LatticeAnimal]) -> str:
    return "".join(a.to_line() + "\n" for a in animals)


def load_animals(text: str) -> list:
    return [LatticeAnimal.from_line(ln) for ln in text.splitlines() if ln.strip()]


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------

def _fixed_animals(s_max: int, d: int):
    """Redelmeier's algorithm: every fixed animal of size <= s_max whose
    lexicographically smallest cell is the origin, each exactly once."""
    origin = (0,) * d
    steps = _unit_steps(d)

    def admissible(c):
        # cells lexicographically >= origin, i.e. the origin stays minimal
        return c >= origin

    out = []
    current = [origin]

    def grow(untried, blocked):
        while untried:
            c = untried.pop()
            current.append(c)
            out.append(tuple(current))
            if len(current) < s_max:
                new = []
                for e in steps:
                    n = tuple(a + b for a, b in zip(c, e))
                    if admissible(n) and n not in blocked:
                        new.append(n)
                grow(untried + new, blocked | set(new))
            current.pop()

    out.append((origin,))
    if s_max > 1:
        first = [n for n in (tuple(e) for e in steps) if admissible(n)]
        grow(first, {origin, *first})
    return out


@lru_cache(maxsize=None)
def _animals_containing_origin(s_max: int, d: int) -> tuple:
    seen = set()
    for fixed in _fixed_animals(s_max, d):
        for c in fixed:
            seen.add(tuple(sorted(tuple(a - b for a, b in zip(x, c)) for x in fixed)))
    return tuple(sorted(seen, key=lambda cells: (len(cells), cells)))


def enumerate_animals_containing_origin(s_max: int, d: int = 2) -> list:
    """All animals A with 0 in A and #A <= s_max, sorted by size then cells."""
    if s_max < 1:
        return []
    guard = ENUM_GUARD.get(d)
    if guard is None or s_max > guard:
        raise CapacityError(f"s_max={s_max} above the enumeration guard for d={d} ({guard})")
    return [LatticeAnimal(c) for c in _animals_containing_origin(s_max, d)]


def count_animals_containing_origin(s_max: int, d: int = 2) -> np.ndarray:
    """Cumulative counts #Phi_{<=s}, s = 1..s_max."""
    sizes = [len(c) for c in _animals_containing_origin(s_max, d)] if s_max >= 1 else []
    return np.cumsum(np.bincount(sizes, minlength=s_max + 1)[1:])


def alpha_bound(d: int) -> int:
    """The counting constant (2d)^(2d) with #Phi_{<=s} <= alpha^s."""
    if d < 1:
        raise ValueError("d >= 1")
    return (2 * d) ** (2 * d)


def linf_boundary(a) -> set:
    """Sites outside A at l-infinity distance 1 from A."""
    cells = set(a.cells if isinstance(a, LatticeAnimal) else map(tuple, a))
    d = len(next(iter(cells)))
    out = set()
    for c in cells:
        for off in itertools.product((-1, 0, 1), repeat=d):
            n = tuple(x + o for x, o in zip(c, off))
            if n not in cells:
                out.add(n)
    return out


def closure(a) -> set:
    """A together with its l-infinity boundary."""
    cells = set(a.cells if isinstance(a, LatticeAnimal) else map(tuple, a))
    return cells | linf_boundary(cells)


# ---------------------------------------------------------------------------
# box unions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxUnion:
    """Union of the closed boxes L*z + offset + [-L/2, L/2]^d, z in ``cells``.

    ``radius`` > 0 turns it into the closed Euclidean radius-neighbourhood of
    that union.
    """

    cells: tuple
    L: float
    radius: float = 0.0
    offset: float = 0.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "cells", tuple(sorted(tuple(int(v) for v in c) for c in self.cells)))

    @property
    def centers(self) -> np.ndarray:
        return np.array(self.cells, dtype=float) * self.L + self.offset

    @property
    def bounds(self):
        c = self.centers
        h = self.L / 2 + self.radius
        return c.min(axis=0) - h, c.max(axis=0) + h

    def distance(self, x) -> np.ndarray:
        """Euclidean distance from each row of ``x`` to the box union."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        c = self.centers
        gap = np.maximum(np.abs(x[:, None, :] - c[None, :, :]) - self.L / 2, 0.0)
        return np.sqrt((gap ** 2).sum(axis=2)).min(axis=1)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        return self.distance(x) <= self.radius + tol

    def segment_inside(self, p, q, tol: float = 1e-9) -> bool:
        """Whether the whole segment [p, q] lies in the region.

        The distance to each box is convex along the segment, so the segment
        is covered iff the intervals {t : dist(box_i) <= radius} cover [0, 1];
        each interval is found by ternary search plus bisection.
        """
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        ivals = []
        for ctr in self.centers:
            iv = _convex_sublevel(lambda t: _box_dist(p + t * (q - p), ctr, self.L / 2),
                                  self.radius + tol)
            if iv is not None:
                ivals.append(iv)
        if not ivals:
            return False
        ivals.sort()
        reach = 0.0
        for a, b in ivals:
            if a > reach + 1e-12:
                return False
            reach = max(reach, b)
            if reach >= 1.0:
                return True
        return reach >= 1.0 - 1e-12

    def polygon_inside(self, poly, tol: float = 1e-9) -> bool:
        poly = np.asarray(poly, float)
        if not np.all(self.contains(poly, tol)):
            return False
        return all(self.segment_inside(poly[i], poly[(i + 1) % len(poly)], tol)
                   for i in range(len(poly)))


def _box_dist(x, ctr, h) -> float:
    g = np.maximum(np.abs(x - ctr) - h, 0.0)
    return float(math.sqrt(float(g @ g)))


def _convex_sublevel(f, level, iters: int = 60):
    """[a, b] = {t in [0, 1] : f(t) <= level} for convex f, or None."""
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    tmin = 0.5 * (lo + hi)
    if f(tmin) > level:
        return None

    def edge(inside, outside):
        if f(outside) <= level:
            return outside
        for _ in range(iters):
            mid = 0.5 * (inside + outside)
            if f(mid) <= level:
                inside = mid
            else:
                outside = mid
        return inside

    return edge(tmin, 0.0), edge(tmin, 1.0)


def grid_offset(L: float) -> float:
    """Shift that aligns side-L blocks with the unit boxes B_z when L is an
    even integer (zero otherwise)."""
    return 0.5 if float(L).is_integer() and int(L) % 2 == 0 else 0.0


def box_union(a, L: float, offset: float = 0.0) -> BoxUnion:
    """B(A): union of the side-L boxes centred at L*z, z in A."""
    cells = a.cells if isinstance(a, LatticeAnimal) else tuple(map(tuple, a))
    return BoxUnion(cells, float(L), 0.0, offset)


def enlarged_union(a, L: float, offset: float = 0.0) -> BoxUnion:
    """The closed L/2-neighbourhood of B(A)."""
    cells = a.cells if isinstance(a, LatticeAnimal) else tuple(map(tuple, a))
    return BoxUnion(cells, float(L), float(L) / 2, offset)


# ---------------------------------------------------------------------------
# weights and greedy animals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WeightField:
    """Nonnegative integer weights on the lattice box origin + [0, shape)."""

    values: np.ndarray
    origin: tuple

    def __post_init__(self):
        v = np.array(self.values, dtype=np.int64)
        if np.any(v < 0):
            raise ValueError("weights must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "origin", tuple(int(o) for o in self.origin))

    @classmethod
    def from_dict(cls, weights: dict, d: int = 2, pad: int = 0) -> "WeightField":
        keys = np.array(list(weights), dtype=np.int64).reshape(-1, d)
        lo = keys.min(axis=0) - pad
        hi = keys.max(axis=0) + pad
        v = np.zeros(tuple(hi - lo + 1), dtype=np.int64)
        for k, w in weights.items():
            v[tuple(np.subtract(k, lo))] = w
        return cls(v, tuple(lo))

    @classmethod
    def zeros(cls, radius: int, d: int = 2) -> "WeightField":
        return cls(np.zeros((2 * radius + 1,) * d, dtype=np.int64), (-radius,) * d)

    @property
    def d(self) -> int:
        return self.values.ndim

    def covers(self, z) -> bool:
        idx = np.subtract(z, self.origin)
        return bool(np.all(idx >= 0) and np.all(idx < self.values.shape))

    def __getitem__(self, z) -> int:
        if not self.covers(z):
            raise KeyError(f"weight at {tuple(z)} outside the field")
        return int(self.values[tuple(np.subtract(z, self.origin))])

    def total(self, cells) -> int:
        return sum(self[c] for c in cells)


@dataclass(frozen=True)
class AnimalResult:
    value: int
    animal: LatticeAnimal
    exact: bool

    @property
    def heuristic(self) -> bool:
        return not self.exact


def lattice_graph(radius: int, d: int = 2):
    """CSR graph of the l1 ball of the given radius around 0.

    Returns (sites, indptr, indices) with ``sites[0]`` the origin.
    """
    rng = range(-radius, radius + 1)
    sites = [c for c in itertools.product(rng, repeat=d) if sum(map(abs, c)) <= radius]
    sites.sort(key=lambda c: (sum(map(abs, c)), c))
    index = {c: i for i, c in enumerate(sites)}
    indptr = [0]
    indices = []
    steps = _unit_steps(d)
    for c in sites:
        for e in steps:
            n = tuple(a + b for a, b in zip(c, e))
            j = index.get(n)
            if j is not None:
                indices.append(j)
        indptr.append(len(indices))
    return np.array(sites, dtype=np.int64), np.array(indptr, dtype=np.int64), np.array(indices, dtype=np.int64)


def max_weight_animal(weights: WeightField, s: int, exact_guard: int = DEFAULT_EXACT_GUARD,
                      beam_width: int = DEFAULT_BEAM) -> AnimalResult:
    """max over Phi_{<=s} of sum_{z in A} N_z.

    With nonnegative weights the maximum is attained at #A = s, so only
    animals of size exactly s are searched.  Exact branch and bound up to
    ``exact_guard``, beam search (a lower bound) above it.
    """
    if s < 1:
        raise ValueError("s >= 1")
    d = weights.d
    if s > exact_guard:
        return _beam_max(weights, s, beam_width)
    sites, indptr, indices = lattice_graph(s - 1, d)
    w = np.array([weights[tuple(c)] for c in sites], dtype=np.float64)
    val, members = _search.connected_extreme(indptr, indices, 0, s, -w, 1.0)
    animal = LatticeAnimal(tuple(map(tuple, sites[members].tolist())))
    return AnimalResult(int(round(-val)), animal, True)


def _beam_max(weights: WeightField, s: int, width: int) -> AnimalResult:
    d = weights.d
    steps = _unit_steps(d)
    origin = (0,) * d
    beam = {frozenset([origin]): weights[origin]}
    for _ in range(s - 1):
        nxt: dict = {}
        for cells, val in beam.items():
            for c in cells:
                for e in steps:
                    n = tuple(a + b for a, b in zip(c, e))
                    if n in cells:
                        continue
                    key = cells | {n}
                    if key not in nxt:
                        nxt[key] = val + weights[n]
        top = sorted(nxt.items(), key=lambda kv: (-kv[1], sorted(kv[0])))[:width]
        beam = dict(top)
    cells, val = min(beam.items(), key=lambda kv: (-kv[1], sorted(kv[0])))
    return AnimalResult(int(val), LatticeAnimal(tuple(cells)), False)


def animal_index_matrix(s: int, d: int = 2, exact_size: bool = False):
    """Animals of Phi_{<=s} as rows of site indices into ``lattice_graph(s-1)``.

    Rows are padded with ``len(sites)``, so appending a zero column to a
    weight matrix lets ``w[:, rows].sum(-1)`` evaluate every animal at once.
    """
    sites, _, _ = lattice_graph(max(s - 1, 0), d)
    index = {tuple(c): i for i, c in enumerate(sites.tolist())}
    animals = [a for a in enumerate_animals_containing_origin(s, d)
               if not exact_size or len(a) == s]
    rows = np.full((len(animals), s), len(sites), dtype=np.int64)
    for i, a in enumerate(animals):
        for j, c in enumerate(a.cells):
            rows[i, j] = index[c]
    return sites, rows


def max_weight_batch(w: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Row-wise greedy-animal maxima for a batch of weight vectors ``w``
    (replicates x sites), with ``rows`` from :func:`animal_index_matrix`."""
    padded = np.concatenate([w, np.zeros((w.shape[0], 1), dtype=w.dtype)], axis=1)
    best = np.zeros(w.shape[0], dtype=w.dtype)
    for chunk in np.array_split(rows, max(1, len(rows) // 256)):
        best = np.maximum(best, padded[:, chunk].sum(axis=2).max(axis=1))
    return best


def poisson_tail(lam: float, k: int) -> float:
    """P(Poisson(lam) >= k) by summing the pmf upward from k (no cancellation)."""
    if k <= 0:
        return 1.0
    if lam <= 0:
        return 0.0
    term = math.exp(k * math.log(lam) - lam - math.lgamma(k + 1))
    total = 0.0
    j = k
    while term > total * 1e-17 or j < lam:
        total += term
        j += 1
        term *= lam / j
    return total


def lemma1_bound_constant(d: int = 2, c_mu: float = 1.0) -> float:
    """b_1 = 2(log alpha + c_mu (e - 1))."""
    return 2.0 * (math.log(alpha_bound(d)) + c_mu * (math.e - 1.0))
