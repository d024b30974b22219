"""Full boxes, the block field X^L, tile confinement and the full-box
probability.

A block is B_z^{1/2,L} = L z + offset + [-L/2, L/2)^d, cut into m^d equal
half-open sub-boxes with m = 4 ceil(sqrt d) + 1; it is full when every
sub-box holds a point.  ``offset`` is 0 by default; for even integer L the
value 1/2 aligns the blocks with the unit boxes B_z.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import geometry, ppp
from . import rng as _rng
from .lattice import LatticeAnimal, closure, enlarged_union, linf_boundary
from .percolation import SiteField
from .stats import TailEstimate


class HypothesisViolated(ValueError):
    """Some block of the l-infinity boundary of A is not full."""


@dataclass(frozen=True)
class BlockConfig:
    L: float
    d: int = 2
    offset: float = 0.0

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError("L must be positive")
        if self.d < 1:
            raise ValueError("d >= 1")

    @property
    def m(self) -> int:
        return 4 * math.ceil(math.sqrt(self.d)) + 1

    @property
    def sub_side(self) -> float:
        return self.L / self.m

    def block_lo(self, z) -> np.ndarray:
        return self.L * np.asarray(z, dtype=float) + self.offset - self.L / 2

    def block_hi(self, z) -> np.ndarray:
        return self.block_lo(z) + self.L

    def block_window(self, zlo, zhi) -> ppp.Window:
        """Window exactly covering blocks zlo..zhi (inclusive)."""
        return ppp.Window(tuple(self.block_lo(zlo)), tuple(self.block_hi(zhi)))


def _points_of(points):
    return np.asarray(getattr(points, "points", points), dtype=np.float64)


def _subbox_counts(xy, lo, side, shape) -> np.ndarray:
    """Counts in the half-open grid lo + side*[i, i+1), any dimension."""
    d = len(shape)
    if len(xy) == 0:
        return np.zeros(shape, dtype=np.int64)
    if d == 2:
        return ppp.bin_counts(xy, lo, side, shape)
    ij = np.floor((xy - np.asarray(lo)) / side).astype(np.int64)
    ok = np.all((ij >= 0) & (ij < np.asarray(shape)), axis=1)
    flat = np.ravel_multi_index(tuple(ij[ok].T), shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape)


def _check_inside(points, lo, hi):
    win = getattr(points, "window", None)
    tol = 1e-12 * np.maximum(1.0, np.abs(hi - lo))
    if win is not None and not win.contains_box(lo + tol, hi - tol):
        raise ValueError(f"block [{lo}, {hi}) is not inside the window")


def is_full_box(points, z, cfg: BlockConfig) -> bool:
    """Whether every one of the m^d sub-boxes of block z holds a point."""
    lo = cfg.block_lo(z)
    _check_inside(points, lo, cfg.block_hi(z))
    xy = _points_of(points)
    counts = _subbox_counts(xy, lo, cfg.sub_side, (cfg.m,) * cfg.d)
    return bool(np.all(counts > 0))


def full_flags(points, cfg: BlockConfig, zlo, zhi) -> np.ndarray:
    """Full indicators for the blocks zlo..zhi (inclusive), index [z - zlo]."""
    zlo = np.asarray(zlo, dtype=np.int64)
    zhi = np.asarray(zhi, dtype=np.int64)
    nb = zhi - zlo + 1
    lo = cfg.block_lo(zlo)
    _check_inside(points, lo, cfg.block_hi(zhi))
    m = cfg.m
    counts = _subbox_counts(_points_of(points), lo, cfg.sub_side, tuple(nb * m))
    if cfg.d == 2:
        return (counts.reshape(nb[0], m, nb[1], m) > 0).all(axis=(1, 3))
    return (counts.reshape(nb[0], m, nb[1], m, nb[2], m) > 0).all(axis=(1, 3, 5))


def _neighbourhood_min(flags: np.ndarray) -> np.ndarray:
    """min over the l-infinity 1-neighbourhood; output shrinks by 1 per side."""
    d = flags.ndim
    out = np.ones(tuple(s - 2 for s in flags.shape), dtype=bool)
    for off in np.ndindex(*(3,) * d):
        sl = tuple(slice(o, o + s - 2) for o, s in zip(off, flags.shape))
        out &= flags[sl]
    return out


def block_field_X(points, cfg: BlockConfig, region) -> SiteField:
    """X_z = 1 iff all 3^d blocks z' with |z' - z|_inf <= 1 are full, on the
    lattice box region = (zlo, zhi) (inclusive)."""
    zlo, zhi = (np.asarray(b, dtype=np.int64) for b in region)
    flags = full_flags(points, cfg, zlo - 1, zhi + 1)
    return SiteField(_neighbourhood_min(flags).astype(np.uint8), tuple(zlo), k=3,
                     meta={"L": cfg.L})


def full_probability_exact(L: float, lam: float, d: int = 2) -> float:
    """P(block is full) for a homogeneous process: sub-boxes are independent."""
    m = 4 * math.ceil(math.sqrt(d)) + 1
    return (-math.expm1(-lam * (L / m) ** d)) ** (m ** d)


def not_full_exact(L: float, lam: float, d: int = 2) -> float:
    """1 - (1 - e^{-lam (L/m)^d})^{m^d}, computed without cancellation."""
    m = 4 * math.ceil(math.sqrt(d)) + 1
    q = math.exp(-lam * (L / m) ** d)
    return -math.expm1(m ** d * math.log1p(-q)) if q < 1 else 1.0


def not_full_bound(L: float, c_mu: float = 1.0, d: int = 2) -> float:
    """m^d exp(-(L/m)^d / c_mu)."""
    m = 4 * math.ceil(math.sqrt(d)) + 1
    return m ** d * math.exp(-((L / m) ** d) / c_mu)


def sample_block_field_law(L: float, lam: float, region, seed: int, replicate: int = 0,
                           d: int = 2) -> SiteField:
    """X^L with the law of :func:`block_field_X` under a homogeneous process,
    drawn from i.i.d. full-block indicators instead of points.

    Fullness of disjoint blocks is independent with the closed-form
    probability, so this is exact in law and much cheaper when only X is
    needed.
    """
    zlo, zhi = (np.asarray(b, dtype=np.int64) for b in region)
    q = full_probability_exact(L, lam, d)
    key = _rng.key64(seed, replicate, _rng.BLOCKS)
    axes = [np.arange(a - 1, b + 2) for a, b in zip(zlo, zhi)]
    coords = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    flags = (_rng.site_uniforms(key, coords) < q).reshape(tuple(len(a) for a in axes))
    return SiteField(_neighbourhood_min(flags).astype(np.uint8), tuple(zlo), k=3,
                     rho_floor=1 - 3 ** d * (1 - q), meta={"L": L, "lam": lam})


# ---------------------------------------------------------------------------
# sampling conditioned on full blocks
# ---------------------------------------------------------------------------

def _zero_truncated_poisson(gen, mu: float, size: int) -> np.ndarray:
    out = gen.poisson(mu, size)
    bad = out == 0
    while bad.any():
        out[bad] = gen.poisson(mu, int(bad.sum()))
        bad = out == 0
    return out


def sample_conditioned(window: ppp.Window, lam: float, cfg: BlockConfig, full_blocks,
                       seed: int, replicate: int = 0) -> ppp.PointSet:
    """Homogeneous Poisson process on ``window`` conditioned on every block
    in ``full_blocks`` being full.

    Sub-boxes are disjoint, so the conditional law keeps the process outside
    those blocks and draws each sub-box count from a zero-truncated Poisson
    law, with uniform positions.
    """
    base = ppp.sample(window, ppp.IntensityModel.homogeneous(lam), seed, replicate)
    xy = base.points
    gen = _rng.stream(seed, replicate, _rng.CONDITION)
    m = cfg.m
    side = cfg.sub_side
    mu = lam * side ** cfg.d
    keep = np.ones(len(xy), dtype=bool)
    fresh = []
    for z in sorted(set(map(tuple, full_blocks))):
        lo = cfg.block_lo(z)
        hi = lo + cfg.L
        _check_inside(base, lo, hi)
        keep &= ~np.all((xy >= lo) & (xy < hi), axis=1)
        counts = _zero_truncated_poisson(gen, mu, m ** cfg.d)
        cells = np.array(list(np.ndindex(*(m,) * cfg.d)), dtype=float)
        corner = np.repeat(lo + cells * side, counts, axis=0)
        pts = corner + gen.random((len(corner), cfg.d)) * side
        fresh.append(np.minimum(pts, np.nextafter(np.repeat(lo + (cells + 1) * side, counts, axis=0), -np.inf)))
    pts = np.vstack([xy[keep], *fresh]) if fresh else xy
    pts = ppp._dedupe(pts.copy(), gen, window.lo, window.hi)
    return ppp.PointSet(pts, window, seed, replicate, header_extra="conditioned")


def confinement_window(a, cfg: BlockConfig) -> ppp.Window:
    """Blocks of the closure of A plus a margin of one block side."""
    cells = np.array(sorted(closure(a)), dtype=np.int64)
    return cfg.block_window(cells.min(axis=0), cells.max(axis=0)).expand(cfg.L)


# ---------------------------------------------------------------------------
# tile confinement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConfinementResult:
    confined: bool
    n_cells: int
    violator: Optional[int] = None
    polygon: Optional[np.ndarray] = None

    @property
    def status(self) -> str:
        return "confined" if self.confined else "counterexample"


def verify_confinement(points, a, cfg: BlockConfig, tri=None, tol: float = 1e-9) -> ConfinementResult:
    """Check that every Voronoi cell meeting B(A) lies inside the closed
    L/2-neighbourhood of B(A), given that all blocks of the l-infinity
    boundary of A are full.

    Cells are computed inside the point window; since adding points only
    shrinks cells, a window-clipped cell contains the true cell, so a
    "confined" verdict transfers to the infinite tiling.  A cell meeting
    B(A) that touches the window raises CensoredError.
    """
    a = a if isinstance(a, LatticeAnimal) else LatticeAnimal(tuple(map(tuple, a)))
    if cfg.d != 2:
        raise ValueError("confinement is checked in the plane")
    for z in sorted(linf_boundary(a)):
        if not is_full_box(points, z, cfg):
            raise HypothesisViolated(f"boundary block {z} is not full")
    if tri is None:
        tri = geometry.delaunay(points)
    window = points.window
    xs, ys, labs, offsets, ids = geometry.cell_arrays(tri, window)
    blo = np.array([cfg.block_lo(z) for z in a.cells])
    bhi = blo + cfg.L
    meets = geometry.polygons_meeting_boxes(xs, ys, offsets, blo, bhi)
    region = enlarged_union(a, cfg.L, cfg.offset)
    n = 0
    for w in np.flatnonzero(meets).tolist():
        s, e = offsets[w], offsets[w + 1]
        if np.any(labs[s:e] < 0):
            raise geometry.CensoredError(f"cell {int(ids[w])} meeting B(A) touches the window")
        n += 1
        poly = np.column_stack([xs[s:e], ys[s:e]])
        if not _polygon_in_region(poly, region, tol):
            return ConfinementResult(False, n, int(ids[w]), poly)
    return ConfinementResult(True, n)


def _polygon_in_region(poly, region, tol) -> bool:
    """Convex polygon inside a union of rounded boxes.

    Each rounded box is convex, so an edge whose two ends lie in the same
    one is inside; the remaining edges go through the exact interval cover.
    """
    c = region.centers
    h = region.L / 2
    gap = np.maximum(np.abs(poly[:, None, :] - c[None, :, :]) - h, 0.0)
    inside = np.sqrt((gap ** 2).sum(axis=2)) <= region.radius + tol
    if not inside.any(axis=1).all():
        return False
    nxt = np.roll(inside, -1, axis=0)
    for k in np.flatnonzero(~(inside & nxt).any(axis=1)).tolist():
        if not region.segment_inside(poly[k], poly[(k + 1) % len(poly)], tol):
            return False
    return True


# ---------------------------------------------------------------------------
# full-box probability
# ---------------------------------------------------------------------------

def full_box_probability(L: float, lam: float, replicates: int, seed: int = 0,
                         d: int = 2, tile: int = 16) -> TailEstimate:
    """Monte Carlo P(block not full), each replicate one block.

    Replicates are the blocks of ``tile``^2 grids of disjoint blocks of one
    Poisson realization (disjoint blocks are independent), one realization
    per batch.  ``extra`` carries the closed form and the bound.
    """
    if d != 2:
        raise ValueError("the Monte Carlo path is two-dimensional")
    model = ppp.IntensityModel.homogeneous(lam)
    cfg = BlockConfig(L, d)
    bound = not_full_bound(L, model.c_mu, d) if lam > 0 else float(cfg.m ** d)
    hits = 0
    done = 0
    batch = 0
    while done < replicates:
        want = min(tile * tile, replicates - done)
        nx = min(tile, want)
        ny = -(-want // nx)
        win = cfg.block_window((0, 0), (nx - 1, ny - 1))
        pts = ppp.sample(win, model, seed, batch)
        flags = full_flags(pts, cfg, (0, 0), (nx - 1, ny - 1)).T.reshape(-1)[:want]
        hits += int((~flags).sum())
        done += want
        batch += 1
    return TailEstimate("lemma7", hits, replicates, d=d, lam=lam, L=L, bound=bound,
                        extra={"exact": not_full_exact(L, lam, d) if lam > 0 else 1.0})
