#!/usr/bin/env python3
"""Benchmark the compiled path kernels against the pure-python fallback.

Runs the same workloads on both backends (they are bit-identical per
sample, so only wall clock differs) and prints steps-per-second for the
barrier-stopping and interval-exit kernels.

Usage: python scripts/benchmark_backends.py [--n 20000] [--dt 1e-4]
"""

import argparse
import time

import numpy as np

from peacock2 import Measure, make_barrier
from peacock2 import pathsim


def barrier_workload(backend: str, n: int, dt: float):
    m = Measure.from_atoms([(-1.0, 0.5), (1.0, 0.5)])
    bar = make_barrier(m, m0=-0.001)
    keys = pathsim.sample_keys(7, 0, n)
    j = np.zeros(n, dtype=np.uint64)
    b = np.full(n, bar.m0)
    s = np.full(n, bar.m0)
    steps = np.zeros(n, dtype=np.int64)
    t0 = time.perf_counter()
    values, stop_steps, exhausted = pathsim.run_barrier_stage(
        keys, j, b, s, steps, bar.s_knots, bar.x_knots, bar.top, dt,
        max_steps=2_000_000, use_bridge=True, workers=2, backend=backend)
    elapsed = time.perf_counter() - t0
    return elapsed, int(stop_steps.sum()), values


def interval_workload(backend: str, n: int, dt: float):
    keys = pathsim.sample_keys(11, 0, n)
    j = np.zeros(n, dtype=np.uint64)
    b = np.zeros(n)
    steps = np.zeros(n, dtype=np.int64)
    t0 = time.perf_counter()
    values, stop_steps, exhausted = pathsim.run_interval_stage(
        keys, j, b, steps, -1.0, 1.0, dt, max_steps=2_000_000,
        workers=2, backend=backend)
    elapsed = time.perf_counter() - t0
    return elapsed, int(stop_steps.sum()), values


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--dt", type=float, default=1e-4)
    args = ap.parse_args()

    backends = pathsim.available_backends()
    print(f"backends: {backends} (active default: {pathsim.backend_name()})")
    print(f"workload: n={args.n} paths, dt={args.dt}\n")
    results = {}
    for workload, fn in (("barrier", barrier_workload), ("interval", interval_workload)):
        print(f"{workload} kernel")
        vals = {}
        for backend in backends:
            elapsed, total_steps, values = fn(backend, args.n, args.dt)
            rate = total_steps / elapsed
            results[(workload, backend)] = rate
            vals[backend] = values
            print(f"  {backend:9s} {elapsed:8.2f} s   {total_steps:>12d} steps   "
                  f"{rate / 1e6:8.2f} M steps/s")
        if len(vals) == 2:
            same = np.array_equal(vals["compiled"], vals["python"])
            ratio = results[(workload, "compiled")] / results[(workload, "python")]
            print(f"  -> outputs bit-identical: {same}; compiled speedup {ratio:.1f}x")
        print()


if __name__ == "__main__":
    main()
