# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled point-queue kernel. Same contract as ``_pqcore_py.run``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t

cnp.import_array()


cdef inline bint _less(int64_t ta, int64_t ia, int64_t tb, int64_t ib) noexcept nogil:
    return ta < tb or (ta == tb and ia < ib)


cdef inline void _push(int64_t* ht, int64_t* hi, Py_ssize_t* size, int64_t t, int64_t i) noexcept nogil:
    cdef Py_ssize_t k = size[0]
    cdef Py_ssize_t parent
    size[0] += 1
    while k > 0:
        parent = (k - 1) >> 1
        if _less(t, i, ht[parent], hi[parent]):
            ht[k] = ht[parent]
            hi[k] = hi[parent]
            k = parent
        else:
            break
    ht[k] = t
    hi[k] = i


cdef inline void _pop(int64_t* ht, int64_t* hi, Py_ssize_t* size) noexcept nogil:
    cdef Py_ssize_t n = size[0] - 1
    cdef int64_t t = ht[n]
    cdef int64_t i = hi[n]
    cdef Py_ssize_t k = 0
    cdef Py_ssize_t c
    size[0] = n
    if n == 0:
        return
    while True:
        c = 2 * k + 1
        if c >= n:
            break
        if c + 1 < n and _less(ht[c + 1], hi[c + 1], ht[c], hi[c]):
            c += 1
        if _less(ht[c], hi[c], t, i):
            ht[k] = ht[c]
            hi[k] = hi[c]
            k = c
        else:
            break
    ht[k] = t
    hi[k] = i


def run(dep_us, offsets, route_edges, fft_us, headway_us):
    cdef int64_t[::1] dep = np.ascontiguousarray(dep_us, dtype=np.int64)
    cdef int64_t[::1] off = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef int64_t[::1] redges = np.ascontiguousarray(route_edges, dtype=np.int64)
    cdef int64_t[::1] fft = np.ascontiguousarray(fft_us, dtype=np.int64)
    cdef int64_t[::1] hw = np.ascontiguousarray(headway_us, dtype=np.int64)
    cdef Py_ssize_t n = dep.shape[0]
    cdef Py_ssize_t n_edges = fft.shape[0]

    out_arr = np.zeros(redges.shape[0], dtype=np.int64)
    cdef int64_t[::1] exit_us = out_arr
    cdef int64_t[::1] last_exit = np.zeros(n_edges, dtype=np.int64)
    cdef cnp.uint8_t[::1] used = np.zeros(n_edges, dtype=np.uint8)
    cdef int64_t[::1] pos = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] ht = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] hi = np.zeros(n + 1, dtype=np.int64)
    cdef Py_ssize_t size = 0
    cdef Py_ssize_t i, j
    cdef int64_t t, e, out, floor_t

    with nogil:
        for i in range(n):
            pos[i] = off[i]
            if off[i] < off[i + 1]:
                _push(&ht[0], &hi[0], &size, dep[i] + fft[redges[off[i]]], i)
        while size > 0:
            t = ht[0]
            i = hi[0]
            _pop(&ht[0], &hi[0], &size)
            j = pos[i]
            e = redges[j]
            out = t
            if used[e]:
                floor_t = last_exit[e] + hw[e]
                if floor_t > t:
                    out = floor_t
            used[e] = 1
            last_exit[e] = out
            exit_us[j] = out
            j += 1
            pos[i] = j
            if j < off[i + 1]:
                _push(&ht[0], &hi[0], &size, out + fft[redges[j]], i)
    return out_arr
