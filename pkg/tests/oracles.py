"""Independent reference implementations used to cross-check the package.

Everything here is deliberately written the slow, obvious way (explicit
loops, textbook formulas) and stays independent of the code paths it
verifies.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_l1_matrix(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = sum(abs(float(a) - float(b)) for a, b in zip(x[i], x[j]))
    return out


def floyd_warshall(adjacency: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths; adjacency uses inf for missing edges."""
    d = adjacency.astype(float).copy()
    np.fill_diagonal(d, 0.0)
    n = d.shape[0]
    for k in range(n):
        d = np.minimum(d, d[:, k, None] + d[None, k, :])
    return d


def union_find_components(n: int, edges) -> list[list[int]]:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups = {}
    for node in range(n):
        groups.setdefault(find(node), []).append(node)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def mirror(point, a, b):
    (px, py), (ax, ay), (bx, by) = point, a, b
    dx, dy = bx - ax, by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    fx, fy = ax + t * dx, ay + t * dy
    return (2 * fx - px, 2 * fy - py)


def enumerate_image_positions(bs_pos, walls, max_order: int) -> list:
    """All mirror images over wall sequences of length <= max_order.

    Sequences never repeat a wall twice in a row (mirroring is an
    involution). Returns (position, order) tuples including the order-0
    source itself.
    """
    out = [(tuple(bs_pos), 0)]
    for order in range(1, max_order + 1):
        for seq in itertools.product(range(len(walls)), repeat=order):
            if any(a == b for a, b in zip(seq, seq[1:])):
                continue
            p = tuple(bs_pos)
            for wi in seq:
                p = mirror(p, walls[wi][0], walls[wi][1])
            out.append((p, order))
    return out


def neighbor_score(d_reference: np.ndarray, d_ranked: np.ndarray, k: int) -> float:
    """Rank-penalty neighborhood score, explicit-loop evaluation.

    The reference matrix defines each point's K-neighborhood; neighbors
    whose rank under the other matrix exceeds K contribute (rank - K).
    """
    n = d_reference.shape[0]
    penalty = 0
    for i in range(n):
        others = [j for j in range(n) if j != i]
        by_ref = sorted(others, key=lambda j: (d_reference[i, j], j))
        by_other = sorted(others, key=lambda j: (d_ranked[i, j], j))
        rank = {j: pos + 1 for pos, j in enumerate(by_other)}
        for j in by_ref[:k]:
            if rank[j] > k:
                penalty += rank[j] - k
    if k < n / 2:
        normalizer = n * k * (2 * n - 3 * k - 1)
    else:
        normalizer = n * (n - k) * (n - k - 1)
    return 1.0 - 2.0 * penalty / normalizer


def brute_continuity(d_orig, d_emb, k):
    return neighbor_score(d_orig, d_emb, k)


def brute_trustworthiness(d_orig, d_emb, k):
    return neighbor_score(d_emb, d_orig, k)


def normal_equations_affine(chart: np.ndarray, gt: np.ndarray) -> np.ndarray:
    """2x3 affine via explicit normal equations."""
    h = np.column_stack([chart, np.ones(len(chart))])
    sol = np.linalg.solve(h.T @ h, h.T @ gt)
    return sol.T


def percentile_linear(values, q: float) -> float:
    """Empirical percentile with linear interpolation between order stats."""
    s = sorted(float(v) for v in values)
    if len(s) == 1:
        return s[0]
    pos = (len(s) - 1) * q / 100.0
    lo = math.floor(pos)
    frac = pos - lo
    if lo + 1 >= len(s):
        return s[-1]
    return s[lo] * (1.0 - frac) + s[lo + 1] * frac


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xm, ym = x - x.mean(), y - y.mean()
    return float((xm * ym).sum() / math.sqrt((xm * xm).sum() * (ym * ym).sum()))


def orthogonal_procrustes_residual(a: np.ndarray, b: np.ndarray) -> float:
    """Residual of the best rotation/reflection aligning centered a to b."""
    a = a - a.mean(axis=0)
    b = b - b.mean(axis=0)
    u, _, vt = np.linalg.svd(a.T @ b)
    r = u @ vt
    return float(np.linalg.norm(a @ r - b))


def random_connected_graph(rng, n: int):
    """(adjacency with inf, CSR arrays) of a random connected weighted graph."""
    adj = np.full((n, n), np.inf)
    np.fill_diagonal(adj, 0.0)
    edges = set()
    nodes = list(rng.permutation(n))
    for a, b in zip(nodes[:-1], nodes[1:]):  # random spanning tree
        edges.add((min(a, b), max(a, b)))
    extra = rng.integers(0, max(1, n * 2))
    for _ in range(int(extra)):
        a, b = rng.integers(0, n, 2)
        if a != b:
            edges.add((min(int(a), int(b)), max(int(a), int(b))))
    for a, b in edges:
        w = float(rng.uniform(0.05, 2.0))
        adj[a, b] = adj[b, a] = w
    indptr = [0]
    indices = []
    weights = []
    for i in range(n):
        nbrs = sorted(j for j in range(n) if np.isfinite(adj[i, j]) and j != i)
        indices.extend(nbrs)
        weights.extend(adj[i, j] for j in nbrs)
        indptr.append(len(indices))
    return adj, (
        np.array(indptr, dtype=np.int64),
        np.array(indices, dtype=np.int64),
        np.array(weights, dtype=float),
    )
