"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--runs 1000000] [--repeat 3]

Each kernel is called once per backend before timing so JIT compilation is
excluded.  Outputs of the two backends are compared and must be identical.
"""
import argparse
import time

import numpy as np

from absentminded import kernels, markov_search
from absentminded._accel import numba_enabled
from absentminded.core import GameParams
from absentminded.equilibria import mixing_profile


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(runs):
    prof = mixing_profile(GameParams(2, 0.9))
    sigma = np.array(prof.sigma)
    yield ("mc_baseline", f"{runs} runs",
           lambda b: kernels.mc_baseline_counts(sigma, prof.p_G, 12345, 0, runs, backend=b))

    cdf1 = np.array([0.5, 1.0])
    cdf2 = np.array([[0.5, 1.0], [0.5, 1.0]])
    accept = np.array([2.0 / 3.0, 1.0])
    yield ("mc_general", f"{runs} runs",
           lambda b: kernels.mc_general_counts(cdf1, cdf2, accept, 7, 0, runs, backend=b))

    yield ("grid_residuals", "1001 x 1001, T=3",
           lambda b: kernels.grid_residuals(np.array([1.0, 1.0]), 1000, 0.95, 1.0, 2e-3,
                                            1e-12, backend=b))

    xs = np.linspace(0.0, 1.0, 8)
    skel = (0, 1, 2, 3)
    yield ("markov_scan", f"|X|=8, {markov_search.n_params(skel)} params",
           lambda b: markov_search.scan(xs, 0.9, skel, m=11, backend=b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    a = ap.parse_args()
    if not numba_enabled():
        print("numba disabled; only the numpy backend will be timed")
    print(f"{'kernel':<16}{'size':<22}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  same")
    for name, size, fn in cases(a.runs):
        fn("numba")
        fn("numpy")
        tn, on = best_of(lambda: fn("numba"), a.repeat)
        tp, op = best_of(lambda: fn("numpy"), a.repeat)
        on, op = (on, op) if isinstance(on, tuple) else ((on,), (op,))
        same = all(np.array_equal(x, y, equal_nan=True) for x, y in zip(on, op))
        print(f"{name:<16}{size:<22}{tn:>10.4f}{tp:>10.4f}{tp / tn:>9.1f}  {same}")


if __name__ == "__main__":
    main()
