"""Tail-probability records, Wilson intervals, decay fits and CSV rows."""

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

Z95 = 1.959963984540054

CSV_COLUMNS = ("experiment", "d", "lambda", "L", "n", "delta", "r", "s", "p",
               "hits", "n_rep", "p_hat", "ci_lo", "ci_hi", "bound", "pass", "censored")
LEMMA_COLUMNS = ("lemma", "d", "rho_or_L", "s", "r", "hits", "n", "p_hat",
                 "ci_lo", "ci_hi", "bound", "pass")


def wilson(hits: int, n: int, z: float = Z95):
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return 0.0, 1.0
    p = hits / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, mid - half), min(1.0, mid + half)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


@dataclass(frozen=True)
class TailEstimate:
    """Hit count for one grid point of an experiment.

    ``bound`` is the explicit bound from the theory when one exists (NaN
    otherwise); ``passed`` then means p_hat - 3 sigma <= bound.  Records with
    the same parameters merge by adding counts.
    """

    experiment: str
    hits: int
    n_rep: int
    d: int = 2
    lam: Optional[float] = None
    L: Optional[float] = None
    n: Optional[int] = None
    delta: Optional[float] = None
    r: Optional[int] = None
    s: Optional[int] = None
    p: Optional[float] = None
    bound: float = math.nan
    censored: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not 0 <= self.hits <= self.n_rep:
            raise ValueError("need 0 <= hits <= n_rep")

    @property
    def p_hat(self) -> float:
        return self.hits / self.n_rep if self.n_rep else 0.0

    @property
    def sigma(self) -> float:
        p = self.p_hat
        return math.sqrt(p * (1 - p) / self.n_rep) if self.n_rep else 0.0

    @property
    def ci(self):
        return wilson(self.hits, self.n_rep)

    @property
    def has_bound(self) -> bool:
        return not math.isnan(self.bound)

    @property
    def passed(self) -> bool:
        if not self.has_bound:
            return True
        return self.p_hat - 3 * self.sigma <= self.bound

    @property
    def censored_rate(self) -> float:
        tot = self.n_rep + self.censored
        return self.censored / tot if tot else 0.0

    def key(self):
        return (self.experiment, self.d, self.lam, self.L, self.n, self.delta, self.r, self.s, self.p)

    def merge(self, other: "TailEstimate") -> "TailEstimate":
        if self.key() != other.key():
            raise ValueError("cannot merge estimates for different parameters")
        return replace(self, hits=self.hits + other.hits, n_rep=self.n_rep + other.n_rep,
                       censored=self.censored + other.censored)

    def row(self) -> list:
        lo, hi = self.ci
        return [self.experiment, self.d, self.lam, self.L, self.n, self.delta, self.r, self.s,
                self.p, self.hits, self.n_rep, self.p_hat, lo, hi,
                self.bound if self.has_bound else None, self.passed, self.censored]


def merge_all(estimates: Sequence[TailEstimate]) -> list:
    """Merge shards by parameter key; output ordered by first appearance."""
    out: dict = {}
    for e in estimates:
        out[e.key()] = out[e.key()].merge(e) if e.key() in out else e
    return list(out.values())


def to_csv(estimates: Sequence[TailEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for e in estimates:
        w.writerow([_fmt(v) for v in e.row()])
    return buf.getvalue()


def _number(text: str):
    v = float(text)
    return int(v) if v.is_integer() and "." not in text and "e" not in text.lower() else v


def from_csv(text: str) -> list:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        def num(k, cast=float):
            return cast(row[k]) if row[k] != "" else None
        out.append(TailEstimate(
            experiment=row["experiment"], hits=int(row["hits"]), n_rep=int(row["n_rep"]),
            d=int(row["d"]), lam=num("lambda"), L=num("L"), n=num("n", int),
            delta=num("delta"), r=num("r", int), s=num("s", _number), p=num("p"),
            bound=num("bound") if row["bound"] != "" else math.nan,
            censored=int(row["censored"])))
    return out


@dataclass(frozen=True)
class LemmaRow:
    lemma: str
    d: int
    rho_or_L: float
    s: Optional[int]
    r: Optional[int]
    hits: int
    n: int
    bound: float

    @property
    def p_hat(self) -> float:
        return self.hits / self.n if self.n else 0.0

    @property
    def passed(self) -> bool:
        p = self.p_hat
        return p - 3 * math.sqrt(p * (1 - p) / max(self.n, 1)) <= self.bound

    def row(self) -> list:
        lo, hi = wilson(self.hits, self.n)
        return [self.lemma, self.d, self.rho_or_L, self.s, self.r, self.hits, self.n,
                self.p_hat, lo, hi, self.bound, self.passed]


def lemma_csv(rows: Sequence[LemmaRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LEMMA_COLUMNS)
    for r in rows:
        w.writerow([_fmt(v) for v in r.row()])
    return buf.getvalue()


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float
    n_points: int

    @property
    def below_resolution(self) -> bool:
        return False


@dataclass(frozen=True)
class BelowResolution:
    """Fewer than three grid points with a positive hit count."""

    n_points: int
    slope: float = math.nan
    intercept: float = math.nan
    r2: float = math.nan

    @property
    def below_resolution(self) -> bool:
        return True


def fit_decay(xs, ps=None):
    """Least squares of log p against x over the points with p > 0.

    Accepts either two sequences or a list of TailEstimate together with the
    name of the grid variable as ``ps`` (default "r").
    """
    if ps is None or isinstance(ps, str):
        var = ps or "r"
        ests = list(xs)
        xs = [getattr(e, var) for e in ests]
        ps = [e.p_hat for e in ests]
    x = np.asarray(xs, dtype=float)
    p = np.asarray(ps, dtype=float)
    keep = p > 0
    if keep.sum() < 3:
        return BelowResolution(int(keep.sum()))
    x, y = x[keep], np.log(p[keep])
    A = np.column_stack([x, np.ones_like(x)])
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, icpt])
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(icpt), r2, int(keep.sum()))
