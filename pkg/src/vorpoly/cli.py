"""Command line interface.

Exit codes: 0 when every check passes, 1 on a bound or invariant failure,
2 on a usage error, 130 when interrupted (partial results are written).
"""

import argparse
import json
import logging
import sys
from contextlib import contextmanager

from . import blocks, experiments, percolation, polyomino, ppp, stats
from . import modified as _modified

logger = logging.getLogger("vorpoly")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERRUPT = 0, 1, 2, 130


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _line(ok: bool, text: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} {text}"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_sample(args) -> int:
    if args.n is not None:
        mcfg = _modified.ModifiedConfig(args.n, args.delta)
        window = mcfg.aligned_window(args.half)
    else:
        window = ppp.Window.square(args.half)
    pts = ppp.sample(window, ppp.IntensityModel.homogeneous(args.lam), args.seed, args.replicate)
    if args.n is not None:
        pts = _modified.build_modified(pts, mcfg, args.seed)
    with _output(args.out) as fh:
        fh.write(pts.to_text())
    return EXIT_OK


def _verify_confinement(args, out) -> bool:
    ok = True
    combos = [(lam, L) for lam in args.lam for L in args.L]
    per = -(-args.replicates // len(combos))
    for i, (lam, L) in enumerate(combos):
        res = experiments.confinement_suite(lam, L, per, seed=args.seed + i)
        ok &= res.passed
        out.write(_line(res.passed, f"confinement lam={lam:g} L={L:g}: "
                                    f"{res.confined}/{res.checked} confined, {res.censored} censored") + "\n")
        for bad in res.counterexamples:
            out.write(f"  counterexample replicate={bad[0]} animal={bad[1]} cell={bad[2]}\n")
        out.flush()
    return ok


def _verify_cluster_product(args, out) -> bool:
    ok = True
    shapes = {"1x1": [(0, 0)], "2x2": [(0, 0), (1, 0), (0, 1), (1, 1)],
              "1x4": [(0, 0), (1, 0), (2, 0), (3, 0)]}
    for rho in args.rho:
        for name, a in shapes.items():
            rep = percolation.verify_cluster_product(rho, a, 4, args.replicates, args.seed)
            ok &= rep.passed
            out.write(_line(rep.passed, f"cluster-product rho={rho:g} A={name}: "
                                        f"E prod f={rep.lhs:.6g} (E f)^#A={rep.rhs:.6g} "
                                        f"sigma={rep.sigma:.3g} n={rep.n}") + "\n")
            out.flush()
    return ok


def _verify_full_box(args, out) -> bool:
    ok = True
    for L in args.L:
        for lam in args.lam:
            est = blocks.full_box_probability(L, lam, args.replicates, args.seed)
            exact = est.extra["exact"]
            lo, hi = est.ci
            good = exact <= est.bound and lo <= exact <= hi and est.passed
            ok &= good
            out.write(_line(good, f"full-box L={L:g} lam={lam:g}: exact={exact:.6g} bound={est.bound:.6g} "
                                  f"p_hat={est.p_hat:.6g} ci=({lo:.6g}, {hi:.6g})") + "\n")
            out.flush()
    return ok


def _verify_modified(args, out) -> bool:
    ok = True
    for n in args.n:
        reports, alt, tot, prob = experiments.modified_suite(n, args.delta, args.lam[0],
                                                             args.replicates, args.seed)
        inv_ok = all(r.passed for r in reports)
        lo, hi = stats.wilson(alt, tot)
        frac_ok = lo <= prob <= hi
        ok &= inv_ok and frac_ok
        out.write(_line(inv_ok and frac_ok,
                        f"modified n={n:g} delta={args.delta:g}: sub-box counts in [1, "
                        f"{reports[0].cap}] on {sum(r.passed for r in reports)}/{len(reports)}; "
                        f"altered {alt / tot:.5f} ci=({lo:.5f}, {hi:.5f}) oracle={prob:.5f}") + "\n")
        out.flush()
    return ok


VERIFY = {"confinement": _verify_confinement, "cluster-product": _verify_cluster_product,
          "full-box": _verify_full_box, "modified-invariants": _verify_modified}

VERIFY_DEFAULTS = {
    "confinement": dict(replicates=1000, lam=[5.0, 20.0], L=[2.0, 4.0]),
    "cluster-product": dict(replicates=100_000, rho=[0.7, 0.8, 0.9]),
    "full-box": dict(replicates=100_000, lam=[1.0], L=[20.0]),
    "modified-invariants": dict(replicates=20, lam=[1.0], n=[8.0, 16.0, 32.0]),
}


def cmd_verify(args) -> int:
    for k, v in VERIFY_DEFAULTS[args.suite].items():
        if getattr(args, k, None) is None:
            setattr(args, k, v)
    with _output(args.out) as out:
        return EXIT_OK if VERIFY[args.suite](args, out) else EXIT_FAIL


def _load_config(args) -> experiments.ExperimentConfig:
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from None
    elif args.experiment:
        data = {"experiment": args.experiment}
    else:
        raise UsageError("tail needs --config or --experiment")
    for key in ("r", "s", "p"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.seed is not None:
        data["seed"] = args.seed
    if args.replicates is not None:
        data["replicates"] = args.replicates
    try:
        return experiments.ExperimentConfig.from_dict(data)
    except (experiments.ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def cmd_tail(args) -> int:
    cfg = _load_config(args)
    report = experiments.run_report(cfg)
    with _output(args.out) as fh:
        if args.format == "jsonl":
            for e in report.estimates:
                fh.write(json.dumps(dict(zip(stats.CSV_COLUMNS, e.row()))) + "\n")
        else:
            fh.write(stats.to_csv(report.estimates))
    for f in report.invariants.failures[:20]:
        logger.error("invariant: %s", f)
    if report.censored_rate > experiments.MAX_CENSORED:
        logger.error("censored rate %.3f above %.2f", report.censored_rate, experiments.MAX_CENSORED)
    if report.interrupted:
        return EXIT_INTERRUPT
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_fit(args) -> int:
    try:
        with open(args.csv) as fh:
            ests = stats.from_csv(fh.read())
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read CSV: {exc}") from None
    if not ests:
        raise UsageError("CSV has no rows")
    ok = True
    with _output(args.out) as out:
        for (exp, var, other), fit in experiments.decay_fits(ests).items():
            label = " ".join(f"{k}={v}" for k, v in other if v is not None)
            if fit.below_resolution:
                out.write(f"{exp} {label}: below resolution ({fit.n_points} nonzero points)\n")
                continue
            good = fit.slope < 0 and fit.r2 >= args.min_r2
            ok &= good
            out.write(_line(good, f"{exp} {label}: slope d log p / d {var} = {fit.slope:.4f} "
                                  f"R2={fit.r2:.4f} points={fit.n_points}") + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_svg(args) -> int:
    from .svg import render

    if args.points:
        pts = ppp.PointSet.load(args.points)
    else:
        half = args.view + 12.0
        pts = ppp.sample(ppp.Window.square(half), ppp.IntensityModel.homogeneous(args.lam[0]), args.seed)
    t = polyomino.Tiling(pts)
    highlight, path, boxes = (), None, ()
    if args.polyomino:
        res = polyomino.min_boxes_at_size(t, args.polyomino)
        highlight = res.polyomino.generators
        boxes = polyomino.boxes_of(t, res.polyomino)
    if args.segment:
        x, y = args.segment[:2], args.segment[2:]
        path = polyomino.segment_path(t, x, y).vertices
    with _output(args.out) as fh:
        fh.write(render(t, args.view, highlight=highlight, path=path, boxes=boxes))
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--replicates", type=int, default=None)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--config", default=None, help="JSON experiment config")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="vorpoly", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("sample", parents=[common], help="write one realization")
    s.add_argument("--lam", type=float, default=1.0)
    s.add_argument("--half", type=float, default=10.0)
    s.add_argument("--replicate", type=int, default=0)
    s.add_argument("--n", type=float, default=None, help="build N(n) instead")
    s.add_argument("--delta", type=float, default=0.5)
    s.set_defaults(func=cmd_sample)

    v = sub.add_parser("verify", parents=[common], help="lemma suites")
    v.add_argument("suite", choices=sorted(VERIFY))
    v.add_argument("--lam", type=float, nargs="+", default=None)
    v.add_argument("--L", type=float, nargs="+", default=None)
    v.add_argument("--rho", type=float, nargs="+", default=None)
    v.add_argument("--n", type=float, nargs="+", default=None)
    v.add_argument("--delta", type=float, default=0.5)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tail", parents=[common], help="run a tail experiment, emit CSV")
    t.add_argument("--experiment", choices=experiments.EXPERIMENTS, default=None)
    t.add_argument("--r", type=int, nargs="+", default=None)
    t.add_argument("--s", type=float, nargs="+", default=None)
    t.add_argument("--p", type=float, nargs="+", default=None)
    t.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    t.set_defaults(func=cmd_tail)

    f = sub.add_parser("fit", parents=[common], help="decay fits from a CSV")
    f.add_argument("csv")
    f.add_argument("--min-r2", type=float, default=0.8)
    f.set_defaults(func=cmd_fit)

    g = sub.add_parser("svg", parents=[common], help="draw a tiling")
    g.add_argument("--points", default=None, help="point file (default: sample)")
    g.add_argument("--lam", type=float, nargs=1, default=[1.0])
    g.add_argument("--view", type=float, default=6.0)
    g.add_argument("--polyomino", type=int, default=None, help="highlight a min-cover polyomino of this size")
    g.add_argument("--segment", type=float, nargs=4, default=None, metavar=("X0", "Y0", "X1", "Y1"))
    g.set_defaults(func=cmd_svg)
    return p


def _normalize(args):
    if args.command == "tail" and args.s is not None:
        args.s = [int(v) if float(v).is_integer() else v for v in args.s]
    if args.seed is None and args.command != "tail":
        args.seed = 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("a subcommand is required")
        _normalize(args)
    except UsageError as exc:
        print(f"vorpoly: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"vorpoly: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        sys.stdout.flush()
        print("vorpoly: interrupted", file=sys.stderr)
        return EXIT_INTERRUPT
    except (ValueError, experiments.ConfigError) as exc:
        print(f"vorpoly: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
