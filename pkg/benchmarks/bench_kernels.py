"""Benchmark the compiled kernels against the pure numpy fallback.

Run after building the extension:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from stumpcert import _kernels_py

try:
    from stumpcert import _kernels
except ImportError:
    _kernels = None


def bench(fn, *args, repeat=5):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def dp_case(n_units, delta, seed=0):
    """Per-feature two-region units, the shape certification produces."""
    rng = np.random.default_rng(seed)
    gammas, probs, offsets = [], [], [0]
    for _ in range(n_units):
        g = rng.integers(0, delta + 1, 2)
        p = rng.dirichlet(np.ones(2))
        gammas.append(g)
        probs.append(p)
        offsets.append(offsets[-1] + 2)
    return (
        np.concatenate(gammas).astype(np.int64),
        np.concatenate(probs),
        np.asarray(offsets, dtype=np.int64),
    )


def main():
    print(f"compiled extension available: {_kernels is not None}\n")
    rows = []

    for n_units in (30, 200, 784):
        g, p, off = dp_case(n_units, 100)
        thr = (n_units * 100) // 2
        t_py = bench(_kernels_py.dp_tail, g, p, off, thr)
        t_cy = bench(_kernels.dp_tail, g, p, off, thr) if _kernels else float("nan")
        rows.append((f"dp_tail units={n_units}", t_py, t_cy))
        t_py = bench(_kernels_py.dp_pdf, g, p, off)
        t_cy = bench(_kernels.dp_pdf, g, p, off) if _kernels else float("nan")
        rows.append((f"dp_pdf  units={n_units}", t_py, t_cy))

    rng = np.random.default_rng(1)
    for n, n_grid in ((256, 1700), (2000, 900)):
        x = rng.uniform(0, 1, n)
        w = rng.uniform(0, 1, (n, 2))
        grid = np.linspace(-4, 5, n_grid)
        for kind, name in ((0, "gauss"), (1, "unif")):
            t_py = bench(_kernels_py.cdf_weighted_sums, x, w, grid, kind, 1.0)
            t_cy = (
                bench(_kernels.cdf_weighted_sums, x, w, grid, kind, 1.0)
                if _kernels
                else float("nan")
            )
            rows.append((f"cdf_sums {name} n={n} grid={n_grid}", t_py, t_cy))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numpy':>10}  {'cython':>10}  {'speedup':>8}")
    for name, t_py, t_cy in rows:
        speed = t_py / t_cy if t_cy == t_cy else float("nan")
        print(f"{name:<{width}}  {1e3 * t_py:>8.3f}ms  {1e3 * t_cy:>8.3f}ms  {speed:>7.2f}x")


if __name__ == "__main__":
    main()
