#!/usr/bin/env python3
"""Benchmark the jitted kernels against their pure-Python/numpy fallbacks.

Runs each hot kernel on a representative desk-scale workload and reports the
best-of-N wall time for both paths plus the speedup. With numba disabled
(BBDYN_NO_NUMBA=1 or no numba installed) the two paths are the same function,
which the table will make obvious.

Usage: python benchmarks/bench_kernels.py [--repeats 5]
"""

import argparse
import time

import numpy as np

from bbdyn import _kernels


def best_of(fn, args, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    rng = np.random.Generator(np.random.Philox(0))
    n = 48
    G = rng.standard_normal((n, n))
    A48 = G + G.T + 2.0 * n * np.eye(n)

    lam32 = np.geomspace(1.0, 1e3, 32)
    A32 = np.diag(lam32)
    x0 = rng.uniform(0.0, 1.0, 32)
    c = np.zeros(32)

    lam8 = np.geomspace(1.0, 100.0, 8)
    d0 = rng.uniform(0.0, 1.0, 8)
    D = rng.standard_normal((2000, 8))

    return [
        ("jacobi_eigh (n=48)", "jacobi_eigh", (A48, 1e-14, 100)),
        ("descent_iterate (n=32, 20k iters)", "descent_iterate",
         (A32, x0, c, 20000, 0.0, 1e12, True)),
        ("coeff_simulate (n=8, 20k iters)", "coeff_simulate", (lam8, d0, 20000)),
        ("mode_sums (2000 x 8)", "mode_sums", (lam8, D)),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    header = f"{'kernel':38s} {'jitted (s)':>12s} {'python (s)':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, name, kargs in workloads():
        jitted = getattr(_kernels, name)
        plain = _kernels.PY_IMPLS[name]
        jitted(*kargs)  # warm up / compile outside the timed region
        t_jit = best_of(jitted, kargs, args.repeats)
        t_py = best_of(plain, kargs, args.repeats)
        speedup = t_py / t_jit if t_jit > 0 else float("inf")
        print(f"{label:38s} {t_jit:12.6f} {t_py:12.6f} {speedup:8.1f}x")
    if not _kernels.NUMBA_ENABLED:
        print("note: numba is disabled; both columns ran the same pure-Python path")


if __name__ == "__main__":
    main()
