#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python reference.

Runs each hot kernel through both backends on identical inputs, verifies
the outputs match exactly, and prints a timing table.
"""

import time

import numpy as np

from packdim.kernels import HAVE_EXT, _pyref

if HAVE_EXT:
    from packdim.kernels import _ext
else:
    _ext = None

QUARTIC_NUM = np.array([-1, 0, 0, 0, 16], dtype=complex)
QUARTIC_DEN = np.array([0, 0, 16], dtype=complex)


def timed(fn, *args, repeats=3):
    best = np.inf
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_escape(n, max_iter):
    cell = 3.0 / n
    args = (QUARTIC_NUM, QUARTIC_DEN, -1.5, -1.5, cell, cell, n, n, max_iter, 4.0)
    ref, t_py = timed(_pyref.escape_grid, *args)
    if _ext is None:
        return f"escape_grid n={n} iter={max_iter}", t_py, None, True
    out, t_ext = timed(_ext.escape_grid, *args)
    return f"escape_grid n={n} iter={max_iter}", t_py, t_ext, np.array_equal(ref, out)


def bench_discs(n_points, r):
    pts = np.random.default_rng(0).random((n_points, 2))
    ref, t_py = timed(_pyref.greedy_disc_pack, pts, r)
    if _ext is None:
        return f"greedy_disc_pack n={n_points} r={r}", t_py, None, True
    out, t_ext = timed(_ext.greedy_disc_pack, pts, r)
    return f"greedy_disc_pack n={n_points} r={r}", t_py, t_ext, np.array_equal(ref, out)


def main():
    print(f"compiled extension available: {HAVE_EXT}")
    rows = [
        bench_escape(512, 50),
        bench_escape(1024, 9),
        bench_escape(2048, 10),
        bench_discs(200_000, 0.01),
        bench_discs(1_000_000, 0.002),
    ]
    w = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{w}}  {'python':>9}  {'ext':>9}  {'speedup':>8}  match")
    for name, t_py, t_ext, match in rows:
        if t_ext is None:
            print(f"{name:<{w}}  {t_py:>8.3f}s  {'-':>9}  {'-':>8}  {match}")
        else:
            print(f"{name:<{w}}  {t_py:>8.3f}s  {t_ext:>8.3f}s  {t_py / t_ext:>7.1f}x  {match}")


if __name__ == "__main__":
    main()
