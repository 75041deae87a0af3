"""Distance matrix, k-NN graph and geodesic tests against slow oracles."""

import numpy as np
import pytest

from radiochart.csi import AlignedTensor
from radiochart.graphs import (
    DistanceMatrix,
    connected_components,
    cross_l1,
    geodesic_matrix,
    knn_graph,
    minimal_connecting_k,
    pairwise_matrix,
)

from oracles import brute_l1_matrix, floyd_warshall, random_connected_graph, union_find_components


def _tensors(n, shape=(2, 8), seed=0):
    rng = np.random.default_rng(seed)
    return [AlignedTensor(rng.uniform(size=shape), 1e9) for _ in range(n)]


def _matrix_from_values(values, kind="pairwise"):
    return DistanceMatrix(np.asarray(values, dtype=float), kind)


def test_pairwise_duplicates_are_zero():
    t = _tensors(1)[0]
    m = pairwise_matrix([t, t])
    assert np.array_equal(m.values, np.zeros((2, 2)))


def test_pairwise_matches_direct_calls():
    from radiochart.csi import cir_distance

    ts = _tensors(3, seed=1)
    m = pairwise_matrix(ts)
    for i in range(3):
        for j in range(3):
            assert m.values[i, j] == pytest.approx(
                cir_distance(ts[i], ts[j]), rel=1e-12, abs=1e-15
            )


def test_pairwise_matches_brute_force_and_is_symmetric():
    ts = _tensors(50, seed=2)
    m = pairwise_matrix(ts)
    x = np.stack([t.flat() for t in ts])
    np.testing.assert_allclose(m.values, brute_l1_matrix(x), rtol=1e-12)
    assert np.array_equal(m.values, m.values.T)  # mirrored exactly


def test_pairwise_shape_mismatch():
    ts = _tensors(2)
    ts.append(AlignedTensor(np.zeros((2, 9)), 1e9))
    with pytest.raises(ValueError, match="tensor 2"):
        pairwise_matrix(ts)


def test_cross_l1_matches_pairwise_block():
    ts = _tensors(12, seed=3)
    full = pairwise_matrix(ts)
    block = cross_l1(ts[:4], ts[4:])
    np.testing.assert_allclose(block, full.values[:4, 4:], rtol=1e-12)


def test_knn_complete_graph():
    values = np.random.default_rng(4).uniform(1, 2, size=(6, 6))
    values = (values + values.T) / 2
    np.fill_diagonal(values, 0.0)
    g = knn_graph(_matrix_from_values(values), 5)
    assert all(g.degree(i) == 5 for i in range(6))


def test_knn_chain_hand_enumeration():
    # 4 collinear points, 1 unit apart in metric terms
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    values = np.abs(x - x.T)
    g = knn_graph(_matrix_from_values(values), 1)
    edges = set()
    for i in range(4):
        nbrs, _ = g.neighbors(i)
        edges.update((min(i, int(j)), max(i, int(j))) for j in nbrs)
    assert edges == {(0, 1), (1, 2), (2, 3)}


def test_knn_k_out_of_range():
    values = np.zeros((3, 3))
    with pytest.raises(ValueError, match="k must"):
        knn_graph(_matrix_from_values(values), 3)


def test_knn_weights_match_matrix():
    rng = np.random.default_rng(5)
    v = rng.uniform(1, 5, size=(10, 10))
    v = (v + v.T) / 2
    np.fill_diagonal(v, 0.0)
    m = _matrix_from_values(v)
    g = knn_graph(m, 3)
    for i in range(10):
        nbrs, w = g.neighbors(i)
        np.testing.assert_array_equal(w, v[i, nbrs])


def test_connected_components_against_union_find():
    rng = np.random.default_rng(6)
    for _ in range(20):
        n = int(rng.integers(4, 30))
        edges = set()
        for _ in range(int(rng.integers(0, n * 2))):
            a, b = rng.integers(0, n, 2)
            if a != b:
                edges.add((min(int(a), int(b)), max(int(a), int(b))))
        indptr = [0]
        indices = []
        adj = [sorted({v for u, v in edges if u == i} | {u for u, v in edges if v == i})
               for i in range(n)]
        for i in range(n):
            indices.extend(adj[i])
            indptr.append(len(indices))
        from radiochart.graphs import NeighborGraph

        g = NeighborGraph(
            n, 1, np.array(indptr, dtype=np.int64),
            np.array(indices, dtype=np.int64), np.ones(len(indices)),
        )
        assert connected_components(g) == union_find_components(n, edges)


def test_two_cliques_two_components():
    v = np.full((6, 6), 100.0)
    np.fill_diagonal(v, 0.0)
    for group in ([0, 1, 2], [3, 4, 5]):
        for i in group:
            for j in group:
                if i != j:
                    v[i, j] = 1.0
    g = knn_graph(_matrix_from_values(v), 2)
    comps = connected_components(g)
    assert [len(c) for c in comps] == [3, 3]


def test_geodesic_chain_sum():
    v = np.array([[0.0, 1.0, 99.0], [1.0, 0.0, 2.0], [99.0, 2.0, 0.0]])
    g = knn_graph(_matrix_from_values(v), 1)
    geo = geodesic_matrix(g)
    assert geo.values[0, 2] == pytest.approx(3.0)
    assert geo.kind == "geodesic"


def test_geodesic_disconnected_reports_sizes():
    v = np.full((5, 5), 100.0)
    np.fill_diagonal(v, 0.0)
    v[0, 1] = v[1, 0] = 1.0
    v[2, 3] = v[3, 2] = v[3, 4] = v[4, 3] = v[2, 4] = v[4, 2] = 1.0
    g = knn_graph(_matrix_from_values(v), 1)
    with pytest.raises(ValueError, match=r"\[3, 2\]"):
        geodesic_matrix(g)


def test_geodesic_matches_floyd_warshall():
    rng = np.random.default_rng(7)
    from radiochart.graphs import NeighborGraph

    for _ in range(30):
        n = int(rng.integers(4, 64))
        adj, (indptr, indices, weights) = random_connected_graph(rng, n)
        g = NeighborGraph(n, 1, indptr, indices, weights)
        geo = geodesic_matrix(g)
        np.testing.assert_allclose(geo.values, floyd_warshall(adj), atol=1e-9)


def test_geodesic_edge_dominance_and_triangle():
    rng = np.random.default_rng(8)
    from radiochart.graphs import NeighborGraph

    n = 40
    adj, (indptr, indices, weights) = random_connected_graph(rng, n)
    g = NeighborGraph(n, 1, indptr, indices, weights)
    geo = geodesic_matrix(g).values
    # geodesic never exceeds any present edge weight
    for i in range(n):
        for e in range(indptr[i], indptr[i + 1]):
            assert geo[i, indices[e]] <= weights[e] + 1e-12
    # triangle inequality (exact up to float association)
    for _ in range(500):
        i, j, k = rng.integers(0, n, 3)
        assert geo[i, j] <= geo[i, k] + geo[k, j] + 1e-9


def test_geodesic_monotone_in_k():
    rng = np.random.default_rng(9)
    pts = rng.uniform(0, 10, size=(40, 2))
    v = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
    m = _matrix_from_values(v)
    geo5 = geodesic_matrix(knn_graph(m, 5)).values
    geo10 = geodesic_matrix(knn_graph(m, 10)).values
    assert np.all(geo10 <= geo5 + 1e-12)


def test_minimal_connecting_k():
    # chain-like metric: k=1 already connects a line of points
    x = np.arange(6, dtype=float)[:, None]
    v = np.abs(x - x.T)
    assert minimal_connecting_k(_matrix_from_values(v)) == 1


def test_matrix_validation():
    with pytest.raises(ValueError, match="symmetric"):
        DistanceMatrix(np.array([[0.0, 1.0], [2.0, 0.0]]), "pairwise")
    with pytest.raises(ValueError, match="diagonal"):
        DistanceMatrix(np.array([[1.0, 1.0], [1.0, 0.0]]), "pairwise")
    with pytest.raises(ValueError, match="kind"):
        DistanceMatrix(np.zeros((2, 2)), "other")


def test_matrix_roundtrip(tmp_path):
    v = np.random.default_rng(10).uniform(1, 2, size=(8, 8))
    v = (v + v.T) / 2
    np.fill_diagonal(v, 0.0)
    m = _matrix_from_values(v)
    m.save(tmp_path, "dpw", {"dataset_sha256": "x"})
    loaded = DistanceMatrix.load(tmp_path, "dpw")
    assert np.array_equal(loaded.values, m.values)
    assert loaded.kind == m.kind
