"""Compiled vs pure-Python kernels on the integration loop and the rhs.

    python benchmarks/bench_kernels.py [--repeat 5]

Both backends run the same DOPRI5 algorithm, so the trajectories must agree
to rounding; the script checks that before reporting timings.
"""
import argparse
import math
import time

import numpy as np

from nambuflow import _backend
from nambuflow.flows import diagonal_flow, symmetric_flow
from nambuflow.special import circle_solution, diagonal_solution_n3

CASES = {
    "symmetric n=3, one period": (symmetric_flow(3, [3, 2]), circle_solution(3, 2, 0.0), 2 * math.pi / math.sqrt(3)),
    "symmetric n=5, t=5": (symmetric_flow(5), np.array([0.3, -0.7, 1.1, 0.2, -1.4]), 5.0),
    "diagonal n=3, t=10": (diagonal_flow(3, [2, 1]), diagonal_solution_n3(2, 1, 0.0), 10.0),
}


def _time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.NAME != "cython":
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation`")
    print(f"{'case':32s} {'compiled [s]':>13s} {'python [s]':>11s} {'speedup':>8s} {'max |dY|':>10s}")
    for name, (spec, X0, T) in CASES.items():
        t_eval = np.linspace(0.0, T, 256)
        run = lambda pure: _backend.dopri_poly(spec.table, X0, 0.0, T, t_eval, 1e-10, 1e-12,
                                               math.inf, 100000, pure=pure)
        tc, (Yc, *_ ) = _time(lambda: run(False), args.repeat)
        tp, (Yp, *_ ) = _time(lambda: run(True), max(1, args.repeat // 2))
        print(f"{name:32s} {tc:13.5f} {tp:11.4f} {tp / tc:8.1f} {np.max(np.abs(Yc - Yp)):10.2e}")
    spec, X0, _ = CASES["symmetric n=5, t=5"]
    k = 2000
    tc, _ = _time(lambda: [_backend.poly_rhs(spec.table, X0) for _ in range(k)], args.repeat)
    tp, _ = _time(lambda: [_backend.poly_rhs(spec.table, X0, pure=True) for _ in range(k)], args.repeat)
    print(f"{'rhs n=5 (per call)':32s} {tc / k:13.2e} {tp / k:11.2e} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
