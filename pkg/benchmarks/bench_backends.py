"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because VORPOLY_NUMBA is read at
import time.  Numba timings exclude the first (compiling) call.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
from vorpoly import BACKEND, geometry, percolation, polyomino, ppp

def best(fn, repeat):
    fn()  # warm-up, includes compilation under numba
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)

repeat = int(sys.argv[1])
pts = ppp.sample(ppp.Window.square(15.0), ppp.IntensityModel.homogeneous(1.0), 7)
tiling = polyomino.Tiling(pts)
cases = {
    "delaunay (900 pts)": lambda: geometry.delaunay(pts),
    "cells + boxes (900 pts)": lambda: [polyomino.Tiling(pts).boxes(v)
                                        for v in range(0, len(pts), 9)
                                        if not tiling.censored(v)],
    "cover_extremes r=5": lambda: polyomino.cover_extremes(tiling, 5),
    "cluster product 2000 reps": lambda: percolation.verify_cluster_product(
        0.8, [(0, 0), (1, 0)], 4, 2000, 1),
}
print(json.dumps({"backend": BACKEND,
                  "times": {k: best(f, repeat) for k, f in cases.items()}}))
"""


def run(flag: str, repeat: int) -> dict:
    env = dict(os.environ, VORPOLY_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    fast = run("1", args.repeat)
    slow = run("0", args.repeat)
    print(f"{'kernel':30s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}")
    for name, t in fast["times"].items():
        u = slow["times"][name]
        print(f"{name:30s} {t:10.4f} {u:10.4f} {u / t:8.1f}x")


if __name__ == "__main__":
    main()
