# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pairwise L1 distances and all-pairs Dijkstra."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def pairwise_l1(double[:, ::1] x):
    """Symmetric matrix of L1 distances between the rows of x [n, d]."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    out = np.zeros((n, n), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, t
    cdef double acc, diff
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for t in range(d):
                diff = x[i, t] - x[j, t]
                acc += diff if diff >= 0.0 else -diff
            o[i, j] = acc
            o[j, i] = acc
    return out


cdef inline void _heap_push(double* keys, long* nodes, Py_ssize_t* size,
                            double key, long node) noexcept nogil:
    cdef Py_ssize_t child = size[0]
    cdef Py_ssize_t parent
    keys[child] = key
    nodes[child] = node
    size[0] += 1
    while child > 0:
        parent = (child - 1) >> 1
        if keys[parent] <= keys[child]:
            break
        keys[parent], keys[child] = keys[child], keys[parent]
        nodes[parent], nodes[child] = nodes[child], nodes[parent]
        child = parent


cdef inline long _heap_pop(double* keys, long* nodes, Py_ssize_t* size,
                           double* key_out) noexcept nogil:
    cdef long top = nodes[0]
    key_out[0] = keys[0]
    size[0] -= 1
    cdef Py_ssize_t hole = 0, child
    keys[0] = keys[size[0]]
    nodes[0] = nodes[size[0]]
    while True:
        child = 2 * hole + 1
        if child >= size[0]:
            break
        if child + 1 < size[0] and keys[child + 1] < keys[child]:
            child += 1
        if keys[hole] <= keys[child]:
            break
        keys[hole], keys[child] = keys[child], keys[hole]
        nodes[hole], nodes[child] = nodes[child], nodes[hole]
        hole = child
    return top


def dijkstra_all_pairs(long[::1] indptr, long[::1] indices, double[::1] weights,
                       Py_ssize_t n):
    """All-pairs shortest-path costs on a CSR graph (binary heap, lazy deletes)."""
    cdef Py_ssize_t m = indices.shape[0]
    out = np.full((n, n), np.inf, dtype=np.float64)
    cdef double[:, ::1] dist = out
    # lazy-deletion heap: every relaxation may push, so size m + n is enough
    heap_keys = np.empty(m + n, dtype=np.float64)
    heap_nodes = np.empty(m + n, dtype=np.int64)
    done = np.empty(n, dtype=np.uint8)
    cdef double[::1] hk = heap_keys
    cdef long[::1] hn = heap_nodes
    cdef cnp.uint8_t[::1] dv = done
    cdef Py_ssize_t src, e, size
    cdef long u, v
    cdef double d, nd
    with nogil:
        for src in range(n):
            for u in range(n):
                dv[u] = 0
            size = 0
            dist[src, src] = 0.0
            _heap_push(&hk[0], &hn[0], &size, 0.0, src)
            while size > 0:
                u = _heap_pop(&hk[0], &hn[0], &size, &d)
                if dv[u]:
                    continue
                dv[u] = 1
                for e in range(indptr[u], indptr[u + 1]):
                    v = indices[e]
                    nd = d + weights[e]
                    if nd < dist[src, v]:
                        dist[src, v] = nd
                        _heap_push(&hk[0], &hn[0], &size, nd, v)
    return out
