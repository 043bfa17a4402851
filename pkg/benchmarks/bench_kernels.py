"""Compiled vs numpy kernels on acceptance-sized workloads.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from cqsim import _kernels


def em_case(n_paths=2048, n_starts=9, n_steps=500):
    rng = np.random.default_rng(0)
    incs = rng.standard_normal((n_paths, n_steps)) * np.sqrt(1e-3)
    x1s = np.linspace(-2, 2, n_starts)
    x2s = np.zeros(n_starts)
    dcoef = np.array([0.0, 1.0, 0.0, 0.2])
    out = (np.empty((n_paths, n_starts)), np.empty((n_paths, n_starts)), np.empty((n_paths, n_starts), np.uint8))

    def run(k):
        k.em_paths(x1s, x2s, incs, dcoef, 1e-3, 2 ** -0.5, 2500.0, *out)
    return f"em_paths {n_paths}x{n_starts} paths, {n_steps} steps", run


def pair_case(n=2401, steps=1000):
    x = np.linspace(-12, 12, n)
    sp = x.copy()
    u0 = 1 + x

    def run(k):
        u1, u2 = u0.copy(), np.zeros(n)
        k.pair_rk4(u1, u2, sp, x[1] - x[0], 1.0, 1e-4, steps)
    return f"pair_rk4 n={n}, {steps} steps", run


def cayley_case(n=1601, steps=1000):
    x = np.linspace(-8, 8, n)
    v = 0.5 * x ** 2 - 0.5
    psi0 = np.exp(-x ** 2 / 2).astype(complex)

    def run(k):
        k.CayleyStepper(v, x[1] - x[0], 1.0, 1e-4).run(psi0.copy(), steps)
    return f"Cayley n={n}, {steps} steps", run


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    py = _kernels.get_backend("python")
    try:
        cy = _kernels.get_backend("cython")
    except ImportError:
        cy = None
        print("compiled kernels not built; timing the numpy fallback only")
    print(f"{'kernel':44s} {'numpy [s]':>10s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, run in (em_case(), pair_case(), cayley_case()):
        tp = best_of(lambda: run(py), args.repeat)
        if cy is None:
            print(f"{name:44s} {tp:10.4f}")
            continue
        tc = best_of(lambda: run(cy), args.repeat)
        print(f"{name:44s} {tp:10.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
