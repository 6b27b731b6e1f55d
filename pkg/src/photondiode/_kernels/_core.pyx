# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Same contracts as _ref (the numpy fallback): Philox-4x32-10 word
generation and the all-pairs coincidence histogram.  Both are pure
integer/IEEE arithmetic, so outputs are bit-identical across backends.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor

cnp.import_array()

cdef extern from *:
    """
    #include <stdint.h>
    static inline void philox_rounds(uint32_t *x0, uint32_t *x1,
                                     uint32_t *x2, uint32_t *x3,
                                     uint32_t key0, uint32_t key1) {
        uint32_t k0 = key0, k1 = key1;
        int r;
        for (r = 0; r < 10; r++) {
            uint64_t p0 = (uint64_t)(*x0) * 0xD2511F53u;
            uint64_t p1 = (uint64_t)(*x2) * 0xCD9E8D57u;
            uint32_t hi0 = (uint32_t)(p0 >> 32), lo0 = (uint32_t)p0;
            uint32_t hi1 = (uint32_t)(p1 >> 32), lo1 = (uint32_t)p1;
            uint32_t nx0 = hi1 ^ *x1 ^ k0;
            uint32_t nx2 = hi0 ^ *x3 ^ k1;
            *x0 = nx0; *x1 = lo1; *x2 = nx2; *x3 = lo0;
            k0 += 0x9E3779B9u; k1 += 0xBB67AE85u;
        }
    }
    """
    void philox_rounds(cnp.uint32_t *x0, cnp.uint32_t *x1,
                       cnp.uint32_t *x2, cnp.uint32_t *x3,
                       cnp.uint32_t key0, cnp.uint32_t key1) nogil


def philox4x32(key0, key1, c0, c1, c2, c3):
    """Philox-4x32-10 block function, vectorized over counters."""
    a0, a1, a2, a3 = np.broadcast_arrays(
        np.asarray(c0, dtype=np.uint32),
        np.asarray(c1, dtype=np.uint32),
        np.asarray(c2, dtype=np.uint32),
        np.asarray(c3, dtype=np.uint32),
    )
    shape = a0.shape
    cdef cnp.uint32_t[::1] x0 = np.ascontiguousarray(a0).ravel()
    cdef cnp.uint32_t[::1] x1 = np.ascontiguousarray(a1).ravel().copy()
    cdef cnp.uint32_t[::1] x2 = np.ascontiguousarray(a2).ravel().copy()
    cdef cnp.uint32_t[::1] x3 = np.ascontiguousarray(a3).ravel().copy()
    x0 = x0.copy()
    cdef cnp.uint32_t k0 = <cnp.uint32_t> (int(key0) & 0xFFFFFFFF)
    cdef cnp.uint32_t k1 = <cnp.uint32_t> (int(key1) & 0xFFFFFFFF)
    cdef Py_ssize_t i, n = x0.shape[0]
    with nogil:
        for i in range(n):
            philox_rounds(&x0[i], &x1[i], &x2[i], &x3[i], k0, k1)
    return (np.asarray(x0).reshape(shape), np.asarray(x1).reshape(shape),
            np.asarray(x2).reshape(shape), np.asarray(x3).reshape(shape))


def pair_diff_histogram(t1, t2, double origin, double bin_width, Py_ssize_t nbins):
    """Histogram of all differences a - b (a from t1, b from t2), sorted inputs."""
    cdef cnp.float64_t[::1] a = np.ascontiguousarray(t1, dtype=np.float64)
    cdef cnp.float64_t[::1] b = np.ascontiguousarray(t2, dtype=np.float64)
    counts_arr = np.zeros(nbins, dtype=np.int64)
    cdef cnp.int64_t[::1] counts = counts_arr
    cdef Py_ssize_t na = a.shape[0], nb = b.shape[0]
    if na == 0 or nb == 0:
        return counts_arr
    cdef double hi_edge = origin + nbins * bin_width
    cdef Py_ssize_t i, j, lo = 0, hi = 0
    cdef double d
    cdef Py_ssize_t idx
    with nogil:
        for i in range(na):
            # b in (a[i] - hi_edge, a[i] - origin]
            while lo < nb and b[lo] <= a[i] - hi_edge:
                lo += 1
            if hi < lo:
                hi = lo
            while hi < nb and b[hi] <= a[i] - origin:
                hi += 1
            for j in range(lo, hi):
                d = a[i] - b[j]
                idx = <Py_ssize_t> floor((d - origin) / bin_width)
                if idx < 0:
                    idx = 0
                elif idx >= nbins:
                    idx = nbins - 1
                counts[idx] += 1
    return counts_arr
