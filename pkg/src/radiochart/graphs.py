"""Pairwise distance matrices, k-NN graphs and geodesic distances.

Global distances follow the manifold-learning recipe: local CIR distances
feed a k-nearest-neighbor graph, and shortest-path costs over that graph
approximate distances between far-apart snapshots. Shortest paths are
computed once per source, which fills a whole matrix row thanks to subpath
optimality.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .csi import AlignedTensor
from .io import read_f64, read_json, write_f64, write_json

KIND_PAIRWISE = "pairwise"
KIND_GEODESIC = "geodesic"


@dataclass
class DistanceMatrix:
    """Symmetric nonnegative distance matrix with a zero diagonal."""

    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"distance matrix must be square, got {v.shape}")
        if self.kind not in (KIND_PAIRWISE, KIND_GEODESIC):
            raise ValueError(f"unknown kind {self.kind!r}")
        if np.any(np.diag(v) != 0.0):
            raise ValueError("diagonal must be zero")
        if not np.array_equal(v, v.T):
            raise ValueError("matrix must be symmetric")
        if np.any(v < 0.0):
            raise ValueError("distances must be nonnegative")
        self.values = v

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def save(self, directory, name: str, meta: dict | None = None):
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        write_f64(directory / f"{name}.f64", self.values)
        sidecar = {"n": self.n, "kind": self.kind}
        sidecar.update(meta or {})
        write_json(directory / f"{name}.json", sidecar)

    @classmethod
    def load(cls, directory, name: str) -> "DistanceMatrix":
        directory = Path(directory)
        meta = read_json(directory / f"{name}.json")
        values = read_f64(directory / f"{name}.f64", (meta["n"], meta["n"]))
        return cls(values, meta["kind"])


@dataclass
class NeighborGraph:
    """Undirected weighted k-NN graph in CSR form (symmetrized by union)."""

    n: int
    k: int
    indptr: np.ndarray  # int64 [n + 1]
    indices: np.ndarray  # int64 [m]
    weights: np.ndarray  # float64 [m]

    def degree(self, i: int) -> int:
        return int(self.indptr[i + 1] - self.indptr[i])

    def neighbors(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.weights[lo:hi]


def pairwise_matrix(tensors: list[AlignedTensor]) -> DistanceMatrix:
    """Matrix of local CIR distances between all snapshot pairs."""
    if len(tensors) < 2:
        raise ValueError("need at least 2 tensors")
    shape = tensors[0].values.shape
    for i, t in enumerate(tensors):
        if t.values.shape != shape:
            raise ValueError(f"tensor {i} has shape {t.values.shape}, expected {shape}")
    x = np.stack([t.flat() for t in tensors]).astype(float)
    return DistanceMatrix(kernels.pairwise_l1(x), KIND_PAIRWISE)


def cross_l1(tensors_a: list[AlignedTensor], tensors_b: list[AlignedTensor]) -> np.ndarray:
    """Local CIR distances between two snapshot lists, shape [len(a), len(b)]."""
    if not tensors_a or not tensors_b:
        raise ValueError("both tensor lists must be nonempty")
    shape = tensors_b[0].values.shape
    for i, t in enumerate([*tensors_a, *tensors_b]):
        if t.values.shape != shape:
            raise ValueError(f"tensor {i} has shape {t.values.shape}, expected {shape}")
    xa = np.stack([t.flat() for t in tensors_a]).astype(float)
    xb = np.stack([t.flat() for t in tensors_b]).astype(float)
    out = np.empty((xa.shape[0], xb.shape[0]))
    for i in range(xa.shape[0]):
        out[i] = np.abs(xb - xa[i]).sum(axis=1)
    return out


def knn_graph(matrix: DistanceMatrix, k: int) -> NeighborGraph:
    """Union-symmetrized k-nearest-neighbor graph of a pairwise matrix.

    Ties in distance are broken by the lower index. Union (rather than
    mutual) symmetrization favors connectivity in sparse regions.
    """
    n = matrix.n
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}, got {k}")
    d = matrix.values.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    adjacency = [set() for _ in range(n)]
    for i in range(n):
        for j in order[i]:
            adjacency[i].add(int(j))
            adjacency[int(j)].add(i)
    indptr = np.zeros(n + 1, dtype=np.int64)
    indices = []
    for i in range(n):
        nbrs = sorted(adjacency[i])
        indices.extend(nbrs)
        indptr[i + 1] = indptr[i] + len(nbrs)
    indices = np.array(indices, dtype=np.int64)
    weights = matrix.values[np.repeat(np.arange(n), np.diff(indptr)), indices]
    return NeighborGraph(n, k, indptr, indices, np.ascontiguousarray(weights))


def connected_components(graph: NeighborGraph) -> list[list[int]]:
    """Partition of the nodes into connected components (each sorted)."""
    seen = np.zeros(graph.n, dtype=bool)
    components = []
    for start in range(graph.n):
        if seen[start]:
            continue
        stack = [start]
        seen[start] = True
        comp = []
        while stack:
            u = stack.pop()
            comp.append(u)
            nbrs, _ = graph.neighbors(u)
            for v in nbrs:
                if not seen[v]:
                    seen[v] = True
                    stack.append(int(v))
        components.append(sorted(comp))
    return components


def geodesic_matrix(graph: NeighborGraph) -> DistanceMatrix:
    """Shortest-path cost between every node pair of a connected graph.

    The result is min-symmetrized: forward and reverse sweeps of one path
    can differ in the last floating-point digit, and the smaller value is
    the better estimate of the path cost either way.
    """
    comps = connected_components(graph)
    if len(comps) > 1:
        sizes = sorted((len(c) for c in comps), reverse=True)
        raise ValueError(
            f"graph is disconnected ({len(comps)} components of sizes {sizes}); "
            "increase k"
        )
    dist = kernels.dijkstra_all_pairs(graph.indptr, graph.indices, graph.weights, graph.n)
    dist = np.minimum(dist, dist.T)
    return DistanceMatrix(dist, KIND_GEODESIC)


def minimal_connecting_k(matrix: DistanceMatrix, start_k: int = 1) -> int:
    """Smallest k for which the union-kNN graph is connected."""
    for k in range(max(1, start_k), matrix.n):
        if len(connected_components(knn_graph(matrix, k))) == 1:
            return k
    raise ValueError("graph cannot be connected for any k < n")
