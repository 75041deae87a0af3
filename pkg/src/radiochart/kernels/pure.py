"""Pure-Python/numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or explicitly disabled via
RADIOCHART_PURE=1). Semantics match the compiled versions; floating-point
sums may differ at machine precision because numpy reduces pairwise.
"""

from __future__ import annotations

import heapq

import numpy as np


def pairwise_l1(x: np.ndarray) -> np.ndarray:
    """Symmetric matrix of L1 distances between the rows of x [n, d]."""
    x = np.ascontiguousarray(x, dtype=float)
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n - 1):
        row = np.abs(x[i + 1 :] - x[i]).sum(axis=1)
        out[i, i + 1 :] = row
        out[i + 1 :, i] = row
    return out


def dijkstra_all_pairs(indptr, indices, weights, n: int) -> np.ndarray:
    """All-pairs shortest-path costs on a CSR graph, one Dijkstra per source.

    Unreachable pairs come out as +inf.
    """
    indptr = np.asarray(indptr)
    indices = np.asarray(indices)
    weights = np.asarray(weights, dtype=float)
    out = np.full((n, n), np.inf)
    for src in range(n):
        dist = out[src]
        dist[src] = 0.0
        done = np.zeros(n, dtype=bool)
        heap = [(0.0, src)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for e in range(indptr[u], indptr[u + 1]):
                v = indices[e]
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
    return out
