# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: segment reduction, row scatter-add, and per-edge
structural statistics over sorted CSR neighbor lists.

Must stay semantically identical to ``_numpy_impl`` (same accumulation
order, so results are bitwise equal across backends).
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()


def segment_sum(const double[:, ::1] values, const cnp.int64_t[::1] seg,
                Py_ssize_t n_segments):
    cdef Py_ssize_t p, j
    cdef Py_ssize_t n_rows = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    out_arr = np.zeros((n_segments, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef cnp.int64_t s
    for p in range(n_rows):
        s = seg[p]
        for j in range(m):
            out[s, j] += values[p, j]
    return out_arr


def scatter_add_rows(double[:, ::1] out, const cnp.int64_t[::1] rows,
                     const double[:, ::1] values):
    cdef Py_ssize_t p, j
    cdef Py_ssize_t n_rows = values.shape[0]
    cdef Py_ssize_t m = values.shape[1]
    cdef cnp.int64_t r
    for p in range(n_rows):
        r = rows[p]
        for j in range(m):
            out[r, j] += values[p, j]
    return np.asarray(out)


def edge_structural_stats(const cnp.int64_t[::1] indptr,
                          const cnp.int64_t[::1] indices,
                          const double[::1] deg,
                          const cnp.int64_t[::1] esrc,
                          const cnp.int64_t[::1] edst):
    cdef Py_ssize_t n_edges = esrc.shape[0]
    out_arr = np.zeros((n_edges, 4), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t e, a, b, ae, be
    cdef cnp.int64_t i, j, ca, cb, k
    cdef double cn, aa, union_size
    for e in range(n_edges):
        i = esrc[e]
        j = edst[e]
        cn = 0.0
        aa = 0.0
        if i == j:
            for a in range(indptr[i], indptr[i + 1]):
                k = indices[a]
                cn += 1.0
                if deg[k] > 1.0:
                    aa += 1.0 / log(deg[k])
            union_size = deg[i]
        else:
            # two-pointer sweep over the sorted neighbor lists
            a = indptr[i]
            ae = indptr[i + 1]
            b = indptr[j]
            be = indptr[j + 1]
            while a < ae and b < be:
                ca = indices[a]
                cb = indices[b]
                if ca == cb:
                    cn += 1.0
                    if deg[ca] > 1.0:
                        aa += 1.0 / log(deg[ca])
                    a += 1
                    b += 1
                elif ca < cb:
                    a += 1
                else:
                    b += 1
            union_size = deg[i] + deg[j] - cn
        out[e, 0] = cn
        out[e, 1] = cn / union_size if union_size > 0.0 else 0.0
        out[e, 2] = aa
        out[e, 3] = deg[i] * deg[j]
    return out_arr
