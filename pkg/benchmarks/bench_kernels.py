"""Compare the compiled Monte Carlo kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from randfactor import _fallback
from randfactor.randproj import draw_projection_batch, make_rng

try:
    from randfactor import _kernels
except ImportError:  # extension not built
    _kernels = None

CASES = [(4096, 1, 4), (4096, 10, 50), (2048, 10, 100), (512, 50, 500), (256, 5, 1000)]


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not available; build with `pip install -e . --no-build-isolation`")
    print(f"{'n':>6} {'k':>4} {'d':>5} {'kernel':>8} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n, k, d in CASES:
        B = draw_projection_batch("gaussian", k, d, n, make_rng(0))
        rng = np.random.default_rng(1)
        u, v, target = rng.standard_normal((3, d))
        ms = np.array([0, d - 1], dtype=np.intp)
        jobs = {
            "moments": lambda mod: mod.moment_batch(B, u, v, 0.1, target, ms),
            "gram": lambda mod: mod.gram_batch(B, 8),
        }
        for name, job in jobs.items():
            t_py = best_of(lambda: job(_fallback), args.repeat)
            if _kernels is None:
                print(f"{n:>6} {k:>4} {d:>5} {name:>8} {1e3 * t_py:>10.2f} {'-':>10} {'-':>8}")
                continue
            t_c = best_of(lambda: job(_kernels), args.repeat)
            print(f"{n:>6} {k:>4} {d:>5} {name:>8} {1e3 * t_py:>10.2f} {1e3 * t_c:>10.2f} {t_py / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
