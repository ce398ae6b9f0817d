#!/usr/bin/env python3
"""Benchmark the Monte Carlo kernels: compiled extension vs pure Python.

Both backends produce bit-identical outputs (asserted here on every size),
so the only difference is speed.

Usage: python benchmarks/bench_kernels.py [--trials N ...]
"""

import argparse
import time

import numpy as np

from obsim._kernels import pykern

try:
    from obsim._kernels import fastkern
except ImportError:
    fastkern = None

JOINT = np.array([[0.25, 0.25, 0.25, 0.25],
                  [0.40, 0.10, 0.10, 0.40],
                  [0.10, 0.40, 0.40, 0.10],
                  [0.45, 0.05, 0.30, 0.20]])


def time_call(fn, *args, repeats=3):
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_lg(n):
    rows = []
    t_py, total_py = time_call(pykern.lg_pair_trials, 0.5, 0.75, 0.25, n, 12345)
    rows.append(("python", t_py, total_py))
    if fastkern is not None:
        t_cy, total_cy = time_call(fastkern.lg_pair_trials, 0.5, 0.75, 0.25,
                                   n, 12345)
        assert total_cy == total_py, "backends diverged"
        rows.append(("cython", t_cy, total_cy))
    return rows


def bench_chsh(n):
    def run(mod):
        out = [np.empty(n, dtype=np.uint8) for _ in range(4)]
        t, _ = time_call(lambda: mod.chsh_trials(JOINT, n, 999, *out))
        return t, out

    rows = []
    t_py, out_py = run(pykern)
    rows.append(("python", t_py, out_py))
    if fastkern is not None:
        t_cy, out_cy = run(fastkern)
        for a, b in zip(out_py, out_cy):
            assert (a == b).all(), "backends diverged"
        rows.append(("cython", t_cy, out_cy))
    return rows


def report(kernel, n, rows):
    base = rows[0][1]
    for name, t, _ in rows:
        speedup = base / t if t > 0 else float("inf")
        rate = n / t / 1e6 if t > 0 else float("inf")
        print(f"{kernel:12s} n={n:>9,d}  {name:7s} {t * 1e3:10.2f} ms "
              f"{rate:8.1f} Mtrials/s  x{speedup:.1f}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, nargs="*",
                        default=[10_000, 100_000, 1_000_000])
    args = parser.parse_args()
    if fastkern is None:
        print("compiled kernel not built; benchmarking pure Python only")
    for n in args.trials:
        report("lg_pair", n, bench_lg(n))
        report("chsh", n, bench_chsh(n))


if __name__ == "__main__":
    main()
