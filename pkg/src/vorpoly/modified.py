"""The regularized planar point set N(n).

The plane is tiled by boxes of side n^delta centred on n^delta Z^2, each cut
into 6 x 6 sub-boxes.  A sub-box keeps its points if it holds between 1 and
cap = ceil(n^{2 delta}); a uniform cap-subset is kept if it holds more; one
uniform point is added if it is empty.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .ppp import PointSet, Window

SUB_GRID = 6


class MisalignedWindowError(ValueError):
    """The window is not a union of whole tiles."""


@dataclass(frozen=True)
class ModifiedConfig:
    n: float
    delta: float = 0.5

    def __post_init__(self):
        if not (self.n >= 1):
            raise ValueError("n >= 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def unmodified(self) -> bool:
        return math.isinf(self.n)

    @property
    def side(self) -> float:
        return float(self.n) ** self.delta

    @property
    def sub_side(self) -> float:
        return self.side / SUB_GRID

    @property
    def cap(self) -> float:
        if self.unmodified:
            return math.inf
        # round before ceil so that exact squares such as 8^{2 * 0.5} stay put
        return math.ceil(round(float(self.n) ** (2 * self.delta), 9))

    def tile_range(self, window: Window):
        """Inclusive integer tile indices covering the window; raises if the
        window is not tile-aligned."""
        out = []
        for lo, hi in zip(window.lo, window.hi):
            a = lo / self.side + 0.5
            b = hi / self.side - 0.5
            ka, kb = round(a), round(b)
            if abs(a - ka) > 1e-9 or abs(b - kb) > 1e-9 or kb < ka:
                raise MisalignedWindowError(
                    f"window [{lo}, {hi}) not aligned to tiles of side {self.side}")
            out.append((ka, kb))
        return out

    def aligned_window(self, half: float) -> Window:
        """Smallest tile-aligned square window containing [-half, half)^2."""
        k = math.ceil(half / self.side - 0.5)
        h = (k + 0.5) * self.side
        return Window((-h, -h), (h, h))


def _first_sub(k0) -> np.ndarray:
    """Global index of the first sub-box of tile k0 (tile k spans sub-boxes
    6k - 3 .. 6k + 2, i.e. [(k - 1/2) side, (k + 1/2) side))."""
    return np.asarray(k0, dtype=np.int64) * SUB_GRID - SUB_GRID // 2


def _sub_index(xy: np.ndarray, cfg: ModifiedConfig, k0) -> np.ndarray:
    """Sub-box coordinates counted from the first sub-box of tile k0.

    Bins are anchored to the lattice, not to the window, so a tile's result
    does not depend on which window it was cut from.
    """
    return np.floor(xy / cfg.sub_side).astype(np.int64) - _first_sub(k0)


def _tile_stream(seed: int, tx: int, ty: int):
    return _rng.stream(seed, 0, _rng.MODIFY, tx, ty)


def _modify_tile(points_by_sub: dict, tx: int, ty: int, cfg: ModifiedConfig, seed: int,
                 k0) -> list:
    gen = _tile_stream(seed, tx, ty)
    cap = cfg.cap
    side = cfg.sub_side
    # sub-boxes in a fixed order inside the tile, so the draws are a function
    # of the tile alone: one batch for the empty sub-boxes, then the subsets
    subs = [((tx - k0[0]) * SUB_GRID + i, (ty - k0[1]) * SUB_GRID + j)
            for j in range(SUB_GRID) for i in range(SUB_GRID)]
    got = [points_by_sub.get(key) for key in subs]
    empty = [k for k, pts in enumerate(got) if pts is None]
    if empty:
        lo = (np.array([subs[k] for k in empty]) + _first_sub(k0)) * side
        fill = np.minimum(lo + gen.random((len(empty), 2)) * side, np.nextafter(lo + side, lo))
        for row, k in enumerate(empty):
            got[k] = fill[row:row + 1]
    for k, pts in enumerate(got):
        if len(pts) > cap:
            got[k] = pts[np.sort(gen.choice(len(pts), size=int(cap), replace=False))]
    return got


def build_modified(points: PointSet, cfg: ModifiedConfig, seed: int, order: str = "row") -> PointSet:
    """N(n) from a realization on a tile-aligned window.

    Each tile draws from its own stream keyed by (seed, tile), so the result
    does not depend on the order in which tiles are visited; ``order`` ("row",
    "column" or "reverse") exists to check exactly that.
    """
    if points.d != 2:
        raise ValueError("the modified model is planar")
    if cfg.unmodified:
        return points
    (kx0, kx1), (ky0, ky1) = cfg.tile_range(points.window)
    xy = np.asarray(points.points)
    idx = _sub_index(xy, cfg, (kx0, ky0))
    nsx = (kx1 - kx0 + 1) * SUB_GRID
    nsy = (ky1 - ky0 + 1) * SUB_GRID
    idx = np.clip(idx, 0, [nsx - 1, nsy - 1])
    flat = idx[:, 0] * nsy + idx[:, 1]
    srt = np.argsort(flat, kind="stable")
    bounds = np.flatnonzero(np.diff(flat[srt])) + 1
    groups = np.split(srt, bounds) if len(srt) else []
    by_sub = {}
    for g in groups:
        f = int(flat[g[0]])
        by_sub[(f // nsy, f % nsy)] = xy[g]

    tiles = [(tx, ty) for ty in range(ky0, ky1 + 1) for tx in range(kx0, kx1 + 1)]
    if order == "column":
        tiles.sort()
    elif order == "reverse":
        tiles.reverse()
    elif order != "row":
        raise ValueError(f"unknown order {order!r}")
    done = {t: _modify_tile(by_sub, t[0], t[1], cfg, seed, (kx0, ky0)) for t in tiles}
    # assemble in row-major tile order whatever the visiting order was
    parts = [p for ty in range(ky0, ky1 + 1) for tx in range(kx0, kx1 + 1) for p in done[(tx, ty)]]
    out = np.concatenate(parts) if parts else np.empty((0, 2))
    extra = (points.header_extra + " " if points.header_extra else "") + \
        f"modified n={cfg.n:g} delta={cfg.delta:g}"
    return PointSet(out, points.window, points.seed, points.replicate, extra)


def sub_box_counts(points: PointSet, cfg: ModifiedConfig) -> np.ndarray:
    """Counts per sub-box as an array indexed by global sub-box coordinates."""
    (kx0, kx1), (ky0, ky1) = cfg.tile_range(points.window)
    nsx = (kx1 - kx0 + 1) * SUB_GRID
    nsy = (ky1 - ky0 + 1) * SUB_GRID
    idx = _sub_index(np.asarray(points.points), cfg, (kx0, ky0))
    idx = np.clip(idx, 0, [nsx - 1, nsy - 1])
    counts = np.zeros((nsx, nsy), dtype=np.int64)
    np.add.at(counts, (idx[:, 0], idx[:, 1]), 1)
    return counts


@dataclass
class ModifiedReport:
    n_sub: int
    min_count: int
    max_count: int
    cap: int
    tiles_full: bool
    max_tile_total: int
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_modified_invariants(points: PointSet, cfg: ModifiedConfig) -> ModifiedReport:
    """Every sub-box holds between 1 and cap points, so every tile is full
    in the 36-sub-box sense and holds at most 36 cap points."""
    counts = sub_box_counts(points, cfg)
    cap = cfg.cap
    nx, ny = counts.shape
    tiles = counts.reshape(nx // SUB_GRID, SUB_GRID, ny // SUB_GRID, SUB_GRID)
    per_tile_min = tiles.min(axis=(1, 3))
    per_tile_sum = tiles.sum(axis=(1, 3))
    failures = []
    if counts.min() < 1:
        failures.append(f"{int((counts < 1).sum())} empty sub-box(es)")
    if counts.max() > cap:
        failures.append(f"{int((counts > cap).sum())} sub-box(es) above cap {cap}")
    if per_tile_sum.max() > SUB_GRID ** 2 * cap:
        failures.append("a tile holds more than 36 cap points")
    return ModifiedReport(counts.size, int(counts.min()), int(counts.max()), int(cap),
                          bool(per_tile_min.min() >= 1), int(per_tile_sum.max()), failures)


def altered_fraction(original: PointSet, cfg: ModifiedConfig) -> float:
    """Fraction of sub-boxes whose count is 0 or above cap."""
    c = sub_box_counts(original, cfg)
    return float(((c == 0) | (c > cfg.cap)).mean())


def altered_probability(lam: float, cfg: ModifiedConfig) -> float:
    """P(Poisson(a) = 0) + P(Poisson(a) > cap), a = lam * sub-box area."""
    from scipy.stats import poisson

    a = lam * cfg.sub_side ** 2
    return float(poisson.pmf(0, a) + poisson.sf(cfg.cap, a))
