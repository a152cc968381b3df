# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.  Semantics match ``krafty._fallback`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def tkr(const double[:, ::1] a, const double[:, ::1] b):
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], q = b.shape[1]
    cdef Py_ssize_t i, r, c
    cdef double air
    out = np.empty((n, m * q), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for r in range(m):
                air = a[i, r]
                for c in range(q):
                    o[i, r * q + c] = air * b[i, c]
    return out


def assign_nearest(const double[:, ::1] x, const double[:, ::1] centers):
    cdef Py_ssize_t n = x.shape[0], k = centers.shape[0], d = x.shape[1]
    cdef Py_ssize_t i, c, t
    cdef double best, acc, diff
    cdef Py_ssize_t arg
    labels = np.empty(n, dtype=np.int64)
    dist2 = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lab = labels
    cdef double[::1] dd = dist2
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for c in range(k):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - centers[c, t]
                    acc = acc + diff * diff
                if acc < best:
                    best = acc
                    arg = c
            lab[i] = arg
            dd[i] = best
    return labels, dist2


cdef inline void _row_min(double[:, ::1] d, cnp.uint8_t[::1] active, Py_ssize_t i,
                          double* val, Py_ssize_t* idx) noexcept nogil:
    cdef Py_ssize_t n = d.shape[0], j
    cdef double best = INFINITY
    cdef Py_ssize_t arg = -1
    for j in range(i + 1, n):
        if active[j] and d[i, j] < best:
            best = d[i, j]
            arg = j
    if arg == -1:
        # only inactive slots remain to the right
        best = INFINITY
    val[0] = best
    idx[0] = arg


def complete_linkage(dist):
    cdef double[:, ::1] d = np.array(dist, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = d.shape[0]
    active_arr = np.ones(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] active = active_arr
    cdef double[::1] diam = np.zeros(n)
    cdef double[::1] nn_val = np.full(n, INFINITY)
    cdef Py_ssize_t[::1] nn_idx = np.full(n, -1, dtype=np.intp)

    out_i_arr = np.empty(n - 1, dtype=np.int64)
    out_j_arr = np.empty(n - 1, dtype=np.int64)
    out_link_arr = np.empty(n - 1)
    out_diam_arr = np.empty(n - 1)
    cdef cnp.int64_t[::1] out_i = out_i_arr
    cdef cnp.int64_t[::1] out_j = out_j_arr
    cdef double[::1] out_link = out_link_arr
    cdef double[::1] out_diam = out_diam_arr

    cdef Py_ssize_t step, i, j, r, c
    cdef double best, link, m
    with nogil:
        for r in range(n - 1):
            _row_min(d, active, r, &nn_val[r], &nn_idx[r])
        for step in range(n - 1):
            best = INFINITY
            i = -1
            for r in range(n):
                if nn_val[r] < best:
                    best = nn_val[r]
                    i = r
            j = nn_idx[i]
            link = d[i, j]
            out_i[step] = i
            out_j[step] = j
            out_link[step] = link
            m = diam[i]
            if diam[j] > m:
                m = diam[j]
            if link > m:
                m = link
            diam[i] = m
            out_diam[step] = m

            active[j] = 0
            nn_val[j] = INFINITY
            nn_idx[j] = -1
            for c in range(n):
                if d[j, c] > d[i, c]:
                    d[i, c] = d[j, c]
                d[c, i] = d[i, c]

            for r in range(n):
                if active[r] and (r == i or nn_idx[r] == i or nn_idx[r] == j):
                    _row_min(d, active, r, &nn_val[r], &nn_idx[r])
    return out_i_arr, out_j_arr, out_link_arr, out_diam_arr
