"""Time the compiled kernels against their vectorized numpy twins.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats 7] [--scale 1.0]

Each kernel pair computes the same quantity; this prints the best-of-N
wall time for both paths and the ratio. When numba is not installed only
the numpy column is reported.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from martlens import kernels


def best_of(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(scale: float):
    rng = np.random.default_rng(0)

    n = int(20_000 * scale)
    d = 12
    Xa = np.hstack([np.ones((n, 1)), rng.normal(size=(n, d))])
    w = rng.uniform(0.1, 2.0, size=n)
    y = rng.normal(size=n)

    m = int(50_000 * scale)
    u_bin = rng.random((m, 8))
    u_val = rng.random((m, 8))
    cum = np.tile(np.array([0.25, 0.5, 0.75, 1.0]), (8, 1))
    lo = np.tile(np.array([0.0, 1.0, 2.0, 3.0]), (8, 1))
    hi = lo + 1.0

    side = max(int(720 * np.sqrt(scale)), 16)
    a = rng.integers(0, 256, (side, side)).astype(np.uint8)
    b = rng.integers(0, 256, (side, side)).astype(np.uint8)

    k = 40
    M = rng.normal(size=(k, k))
    A = M @ M.T + k * np.eye(k)
    rhs = rng.normal(size=k)

    return [
        ("weighted_gram", f"n={n} d={d}",
         kernels.weighted_gram_numba, kernels.weighted_gram_numpy, (Xa, w)),
        ("weighted_moment", f"n={n} d={d}",
         kernels.weighted_moment_numba, kernels.weighted_moment_numpy, (Xa, w, y)),
        ("draw_bin_values", f"n={m} d=8",
         kernels.draw_bin_values_numba, kernels.draw_bin_values_numpy,
         (u_bin, u_val, cum, lo, hi)),
        ("frame_mad", f"{side}x{side}",
         kernels.frame_mad_numba, kernels.frame_mad_numpy, (a, b)),
        ("cholesky_solve", f"k={k}",
         kernels.cholesky_solve_numba, kernels.cholesky_solve_numpy, (A, rhs)),
        ("gauss_solve", f"k={k}",
         kernels.gauss_solve_numba, kernels.gauss_solve_numpy,
         (A, rhs, 1e-12)),
    ]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiply problem sizes (0.1 for a quick look)")
    args = ap.parse_args()

    if kernels.HAVE_NUMBA:
        kernels.warmup()
        print(f"numba available, compiled paths warmed ({args.repeats} repeats)")
    else:
        print("numba not installed, numpy path only")

    header = f"{'kernel':<18} {'size':<16} {'numpy':>12} {'numba':>12} {'ratio':>8}"
    print(header)
    print("-" * len(header))
    for name, size, fn_nb, fn_np, call_args in build_cases(args.scale):
        t_np = best_of(fn_np, call_args, args.repeats)
        if kernels.HAVE_NUMBA:
            t_nb = best_of(fn_nb, call_args, args.repeats)
            ratio = t_np / t_nb if t_nb > 0 else float("inf")
            print(f"{name:<18} {size:<16} {t_np * 1e3:>10.3f}ms {t_nb * 1e3:>10.3f}ms {ratio:>7.2f}x")
        else:
            print(f"{name:<18} {size:<16} {t_np * 1e3:>10.3f}ms {'-':>12} {'-':>8}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
