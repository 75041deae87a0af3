#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run from the repository root after building the extension:

    python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from radiochart.kernels import implementations


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _random_knn_csr(rng, n, k):
    pts = rng.uniform(0, 100, size=(n, 2))
    d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1)[:, :k]
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in order[i]:
            adj[i].add(int(j))
            adj[int(j)].add(i)
    indptr = [0]
    indices = []
    weights = []
    for i in range(n):
        nbrs = sorted(adj[i])
        indices.extend(nbrs)
        weights.extend(d[i, j] for j in nbrs)
        indptr.append(len(indices))
    return (
        np.array(indptr, dtype=np.int64),
        np.array(indices, dtype=np.int64),
        np.array(weights),
    )


def main():
    impls = implementations()
    if "compiled" not in impls:
        print("compiled extension not available; benchmarking pure backend only")
    rng = np.random.default_rng(0)

    print(f"{'kernel':<28} {'size':<18} " + " ".join(f"{name:>10}" for name in impls))
    for n, d in [(300, 1024), (800, 2048), (1500, 4096)]:
        x = rng.uniform(size=(n, d))
        times = {name: _time(impl.pairwise_l1, x) for name, impl in impls.items()}
        row = " ".join(f"{times[name]:>9.3f}s" for name in impls)
        speed = (
            f"  ({times['pure'] / times['compiled']:.1f}x)"
            if len(times) == 2
            else ""
        )
        print(f"{'pairwise_l1':<28} {f'[{n} x {d}]':<18} {row}{speed}")
    for n, k in [(500, 10), (1000, 15), (2000, 15)]:
        indptr, indices, weights = _random_knn_csr(rng, n, k)
        times = {
            name: _time(impl.dijkstra_all_pairs, indptr, indices, weights, n)
            for name, impl in impls.items()
        }
        row = " ".join(f"{times[name]:>9.3f}s" for name in impls)
        speed = (
            f"  ({times['pure'] / times['compiled']:.1f}x)"
            if len(times) == 2
            else ""
        )
        print(f"{'dijkstra_all_pairs':<28} {f'[n={n}, k={k}]':<18} {row}{speed}")


if __name__ == "__main__":
    main()
