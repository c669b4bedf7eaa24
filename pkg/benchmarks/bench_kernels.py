#!/usr/bin/env python3
"""Benchmark the compiled kernels against their NumPy fallbacks.

Usage: python benchmarks/bench_kernels.py [--repeats N]

Also cross-checks that both backends return identical results on the
benchmark problems (they are designed to agree bit-for-bit).
"""

import argparse
import time

import numpy as np

from gazeseg.kernels import available_backends


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_slic(backends, repeats):
    rng = np.random.default_rng(0)
    h, w, step = 512, 512, 15
    lab = np.ascontiguousarray(rng.normal(50, 20, (h, w, 3)))
    nx, ny = w // step, h // step
    gx, gy = np.meshgrid(
        (w - nx * step) / 2 + step / 2 + np.arange(nx) * step,
        (h - ny * step) / 2 + step / 2 + np.arange(ny) * step,
    )
    k = nx * ny
    centers = np.column_stack(
        [
            rng.normal(50, 5, k),
            rng.normal(0, 2, k),
            rng.normal(0, 2, k),
            gx.ravel(),
            gy.ravel(),
        ]
    )
    invm2 = (10.0 / step) ** 2

    print(f"\nSLIC assignment/update: {h}x{w}, {k} clusters, 10 iterations")
    results = {}
    for name, (slic_fn, _) in backends.items():
        secs, labels = _time(
            lambda: slic_fn(lab, centers.copy(), step, invm2, 10), repeats
        )
        results[name] = (secs, labels)
        print(f"  {name}: {secs * 1000:8.1f} ms")
    if len(results) == 2:
        same = np.array_equal(results["py"][1], results["cy"][1])
        print(f"  label maps identical: {same}")
        print(f"  speedup: {results['py'][0] / results['cy'][0]:.1f}x")
        assert same


def bench_stump(backends, repeats):
    rng = np.random.default_rng(1)
    n, d = 20_000, 64
    X = np.ascontiguousarray(rng.normal(size=(n, d)))
    r = rng.normal(size=n)
    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable"), dtype=np.int64)
    qs = np.linspace(0, 1, 33)
    cand = [np.unique(np.quantile(X[:, j], qs)) for j in range(d)]
    tf = np.ascontiguousarray(np.concatenate(cand))
    to = np.zeros(d + 1, dtype=np.int64)
    np.cumsum([len(c) for c in cand], out=to[1:])

    print(f"\nStump scan: n={n}, d={d}, 33 quantile thresholds per dim")
    results = {}
    for name, (_, scan_fn) in backends.items():
        secs, out = _time(lambda: scan_fn(X, r, order, tf, to), repeats)
        results[name] = (secs, out)
        print(f"  {name}: {secs * 1000:8.1f} ms")
    if len(results) == 2:
        same = results["py"][1] == results["cy"][1]
        print(f"  results identical: {same}")
        print(f"  speedup: {results['py'][0] / results['cy'][0]:.1f}x")
        assert same


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    bench_slic(backends, args.repeats)
    bench_stump(backends, args.repeats)


if __name__ == "__main__":
    main()
