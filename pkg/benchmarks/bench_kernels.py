"""Timing comparison between the compiled kernels and the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [n_paths n_steps dim]
"""

import sys
import time

import numpy as np

from aperiod_sde._kernels import _reference

try:
    from aperiod_sde._kernels import _speedups
except ImportError:
    _speedups = None


def build_problem(n_paths, n_steps, d):
    rng = np.random.default_rng(7)
    incr = rng.standard_normal((n_paths, n_steps, d)) * 0.1
    x_in = rng.standard_normal((n_paths, n_steps + 1, d))
    exp_dt = np.exp(-np.linspace(0.5, 2.0, d) * 0.01)
    forcing = rng.standard_normal((n_steps, d))
    sigma_t = np.abs(rng.standard_normal((n_steps, d))) * 0.2
    return incr, x_in, exp_dt, forcing, sigma_t


def run(impl, incr, x_in, exp_dt, forcing, sigma_t, repeats):
    out = np.zeros_like(x_in)
    best = float("inf")
    for _ in range(repeats):
        out[:] = 0.0
        t0 = time.perf_counter()
        impl.gamma_pass(out, x_in, incr, exp_dt, forcing, sigma_t, 0.1, 0.05, 0.01)
        best = min(best, time.perf_counter() - t0)
    return best, out.copy()


def main():
    n_paths, n_steps, d = 2000, 2000, 2
    if len(sys.argv) == 4:
        n_paths, n_steps, d = map(int, sys.argv[1:])
    problem = build_problem(n_paths, n_steps, d)
    cells = n_paths * n_steps * d

    t_ref, out_ref = run(_reference, *problem, repeats=3)
    print(f"numpy fallback : {t_ref * 1e3:8.2f} ms  ({cells / t_ref / 1e6:8.1f} Mcell/s)")
    if _speedups is None:
        print("compiled kernel: not built")
        return
    t_c, out_c = run(_speedups, *problem, repeats=3)
    print(f"compiled kernel: {t_c * 1e3:8.2f} ms  ({cells / t_c / 1e6:8.1f} Mcell/s)")
    print(f"speedup        : {t_ref / t_c:8.2f}x")
    print(f"max |diff|     : {np.abs(out_ref - out_c).max():.3e}")


if __name__ == "__main__":
    main()
