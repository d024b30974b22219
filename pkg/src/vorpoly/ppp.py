"""Poisson point processes on rectangular windows.

Homogeneous processes are sampled as a Poisson count followed by uniform
positions; bounded-density processes by thinning a homogeneous process of
intensity ``c_mu`` (the density is required to stay within
``[1/c_mu, c_mu]``).  All boxes are half-open, ``[lo, hi)``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import rng as _rng
from ._accel import USE_NUMBA, kernel

logger = logging.getLogger(__name__)


class IntensityBoundError(ValueError):
    """A density value fell outside [1/c_mu, c_mu]."""


@dataclass(frozen=True)
class Window:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise ValueError("window dimension must be 2 or 3")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"empty window {lo} .. {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def square(cls, half: float, d: int = 2, center=None) -> "Window":
        c = np.zeros(d) if center is None else np.asarray(center, float)
        return cls(tuple(c - half), tuple(c + half))

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= self.lo) & (x < self.hi), axis=1)

    def contains_box(self, lo, hi) -> bool:
        return bool(np.all(np.asarray(lo) >= self.lo) and np.all(np.asarray(hi) <= self.hi))

    def expand(self, margin: float) -> "Window":
        return Window(tuple(np.subtract(self.lo, margin)), tuple(np.add(self.hi, margin)))


@dataclass(frozen=True)
class IntensityModel:
    """Either ``homogeneous(lam)`` or ``bounded(density, c_mu)``.

    ``density`` maps an (n, d) array of positions to n positive values.
    """

    kind: str
    lam: float = 1.0
    density: Optional[Callable] = None
    c_mu: float = 1.0

    @classmethod
    def homogeneous(cls, lam: float) -> "IntensityModel":
        if lam < 0:
            raise ValueError("intensity must be nonnegative")
        return cls("homogeneous", lam=float(lam), c_mu=max(float(lam), 1.0 / float(lam)) if lam > 0 else math.inf)

    @classmethod
    def bounded(cls, density: Callable, c_mu: float) -> "IntensityModel":
        if c_mu < 1:
            raise ValueError("c_mu must be >= 1")
        return cls("bounded", density=density, c_mu=float(c_mu))

    def check_grid(self, window: Window, n: int = 25) -> None:
        """Spot-check the density bounds on an n^d grid of the window."""
        if self.kind != "bounded":
            return
        axes = [np.linspace(a, b, n, endpoint=False) for a, b in zip(window.lo, window.hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, window.d)
        _check_density(np.asarray(self.density(grid), float), self.c_mu)

    def mean_measure(self, lo, hi, n: int = 64) -> float:
        """mu of the box [lo, hi) (midpoint rule for bounded densities)."""
        vol = float(np.prod(np.subtract(hi, lo)))
        if self.kind == "homogeneous":
            return self.lam * vol
        axes = [a + (np.arange(n) + 0.5) * (b - a) / n for a, b in zip(lo, hi)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))
        return float(np.mean(self.density(grid))) * vol


def _check_density(values: np.ndarray, c_mu: float) -> None:
    tol = 1e-12
    if np.any(values < 1.0 / c_mu - tol) or np.any(values > c_mu + tol):
        bad = values[(values < 1.0 / c_mu - tol) | (values > c_mu + tol)][0]
        raise IntensityBoundError(f"density value {bad:g} outside [{1 / c_mu:g}, {c_mu:g}]")


@dataclass(frozen=True, eq=False)
class PointSet:
    points: np.ndarray
    window: Window
    seed: int = 0
    replicate: int = 0
    header_extra: str = field(default="", compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1, self.window.d)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return self.window.d

    def header(self) -> str:
        h = f"# d={self.d} seed={self.seed} replicate={self.replicate}"
        return h + (" " + self.header_extra if self.header_extra else "")

    def to_text(self) -> str:
        lines = [self.header(),
                 "# window lo=" + ",".join(repr(v) for v in self.window.lo)
                 + " hi=" + ",".join(repr(v) for v in self.window.hi)]
        lines.extend(" ".join(repr(float(v)) for v in p) for p in self.points)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PointSet":
        meta: dict = {}
        extra = ""
        window = None
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("window"):
                    parts = dict(tok.split("=", 1) for tok in body.split()[1:])
                    window = Window(tuple(map(float, parts["lo"].split(","))),
                                    tuple(map(float, parts["hi"].split(","))))
                    continue
                toks = body.split()
                rest = []
                for tok in toks:
                    k, sep, v = tok.partition("=")
                    if sep and k in ("d", "seed", "replicate") and not rest:
                        meta[k] = int(v)
                    else:
                        rest.append(tok)
                extra = " ".join(rest)
                continue
            rows.append([float(v) for v in line.split()])
        d = meta.get("d", len(rows[0]) if rows else 2)
        pts = np.array(rows, dtype=np.float64).reshape(-1, d)
        if window is None:
            lo = pts.min(axis=0) if len(pts) else np.zeros(d)
            hi = pts.max(axis=0) + 1e-9 if len(pts) else np.ones(d)
            window = Window(tuple(lo), tuple(hi))
        return cls(pts, window, meta.get("seed", 0), meta.get("replicate", 0), extra)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "PointSet":
        with open(path) as fh:
            return cls.from_text(fh.read())


def _uniform_in(gen: np.random.Generator, lo, hi, n: int) -> np.ndarray:
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    u = lo + gen.random((n, len(lo))) * (hi - lo)
    # guard the half-open upper face against rounding up to hi
    return np.minimum(u, np.nextafter(hi, lo))


def _dedupe(pts: np.ndarray, gen, lo, hi) -> np.ndarray:
    while True:
        if len(pts) < 2:
            return pts
        order = np.lexsort(pts.T[::-1])
        srt = pts[order]
        same = np.all(srt[1:] == srt[:-1], axis=1)
        if not same.any():
            return pts
        dup = np.sort(order[1:][same])
        logger.warning("resampling %d duplicate point(s)", len(dup))
        pts[dup] = _uniform_in(gen, lo, hi, len(dup))


def sample(window: Window, model: IntensityModel, seed: int, replicate: int = 0) -> PointSet:
    """One realization of the process restricted to ``window``."""
    gen = _rng.stream(seed, replicate, _rng.POINTS)
    if model.kind == "homogeneous":
        n = gen.poisson(model.lam * window.volume) if model.lam > 0 else 0
        pts = _uniform_in(gen, window.lo, window.hi, n)
    else:
        n = gen.poisson(model.c_mu * window.volume)
        cand = _uniform_in(gen, window.lo, window.hi, n)
        dens = np.asarray(model.density(cand), dtype=float) if n else np.empty(0)
        _check_density(dens, model.c_mu)
        keep = gen.random(n) * model.c_mu < dens
        pts = cand[keep]
    pts = _dedupe(pts, gen, window.lo, window.hi)
    return PointSet(pts, window, seed, replicate)


def count_in(points, lo, hi=None) -> int:
    """Number of points in the half-open box [lo, hi)."""
    if hi is None:
        lo, hi = lo
    xy = getattr(points, "points", points)
    if len(xy) == 0:
        return 0
    m = np.all((xy >= np.asarray(lo)) & (xy < np.asarray(hi)), axis=1)
    return int(m.sum())


@kernel
def _bin_counts_nb(xy, origin, side, shape):
    out = np.zeros(shape[0] * shape[1], dtype=np.int64)
    for i in range(xy.shape[0]):
        ix = int(np.floor((xy[i, 0] - origin[0]) / side))
        iy = int(np.floor((xy[i, 1] - origin[1]) / side))
        if 0 <= ix < shape[0] and 0 <= iy < shape[1]:
            out[ix * shape[1] + iy] += 1
    return out.reshape(shape[0], shape[1])


def _bin_counts_np(xy, origin, side, shape):
    ij = np.floor((xy - origin) / side).astype(np.int64)
    ok = np.all((ij >= 0) & (ij < np.asarray(shape)), axis=1)
    flat = ij[ok, 0] * shape[1] + ij[ok, 1]
    return np.bincount(flat, minlength=shape[0] * shape[1]).reshape(shape)


def bin_counts(points, origin, side: float, shape) -> np.ndarray:
    """Counts in the grid of half-open squares origin + side*([i, i+1) x [j, j+1))."""
    xy = np.ascontiguousarray(getattr(points, "points", points)[:, :2], dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    shape = np.asarray(shape, dtype=np.int64)
    if USE_NUMBA:
        return _bin_counts_nb(xy, origin, float(side), shape)
    return _bin_counts_np(xy, origin, float(side), tuple(shape))


def lattice_counts(points, zlo, zhi) -> dict:
    """N_z = #(B_z ∩ N) for integer z in the box zlo..zhi (inclusive), d = 2."""
    zlo = np.asarray(zlo, int)
    zhi = np.asarray(zhi, int)
    shape = zhi - zlo + 1
    grid = bin_counts(points, zlo - 0.5, 1.0, shape)
    return {(int(zlo[0] + i), int(zlo[1] + j)): int(grid[i, j])
            for i in range(shape[0]) for j in range(shape[1])}
