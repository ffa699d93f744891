#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-NumPy fallback.

Run after `pip install -e . --no-build-isolation`:

    python benchmarks/bench_kernels.py

Covers the three hot paths: plain 1-d transforms, grouped transforms with
evenly spaced sub-frequencies, sorted pair histograms, and radial pair
counting with translation correction.
"""

import time

import numpy as np

from pointdiff import _kernels, _kernels_py

try:
    from pointdiff import _kernels_c
except ImportError:
    _kernels_c = None


def timeit(fn, *args, repeat=5, **kwargs):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args, **kwargs)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    n = 10_000
    x = np.sort(rng.uniform(-5000, 5000, n))
    w = np.ones(n, dtype=complex)
    k = np.linspace(0.05, 4.0, 700)
    base = np.linspace(0.1, 4.0, 79)
    pts3 = rng.uniform(-4, 4, size=(600, 3))
    edges = np.linspace(0.2, 2.0, 10)

    cases = [
        ("dft_1d            (1e4 pts x 700 k)",
         lambda impl: _kernels.dft_1d(x, w, k, impl=impl)),
        ("dft_grouped_1d    (1e4 pts x 79 x 9)",
         lambda impl: _kernels.dft_grouped_1d(x, w, base, 0.0025, 9, impl=impl)),
        ("pair_hist_1d      (1e4 pts, r<=20)",
         lambda impl: _kernels.pair_hist_1d(x, w, -20.05, 0.1, 401, 20.0, impl=impl)),
        ("pair_radial_hist  (600 pts, d=3)",
         lambda impl: _kernels.pair_radial_hist(pts3, edges, 4.0, impl=impl)),
    ]

    print(f"active backend: {_kernels.BACKEND}")
    header = f"{'kernel':38s} {'pure numpy':>12s} {'compiled':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for label, call in cases:
        t_py = timeit(call, _kernels_py)
        if _kernels_c is not None:
            t_c = timeit(call, _kernels_c)
            print(f"{label:38s} {t_py * 1e3:10.2f}ms {t_c * 1e3:10.2f}ms {t_py / t_c:8.1f}x")
        else:
            print(f"{label:38s} {t_py * 1e3:10.2f}ms {'n/a':>12s} {'':>9s}")


if __name__ == "__main__":
    main()
