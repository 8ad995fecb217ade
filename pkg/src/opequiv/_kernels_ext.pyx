# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled versions of the kernels in ``_kernels_py``."""
import numpy as np


def conv_matmul(const double[:, :, ::1] x, const double[:, :, ::1] y,
                const Py_ssize_t[::1] ia, const Py_ssize_t[::1] ib,
                const Py_ssize_t[::1] ic, const Py_ssize_t[::1] starts):
    cdef Py_ssize_t P = x.shape[1], Q = x.shape[2], R = y.shape[2]
    cdef Py_ssize_t n_out = starts.shape[0]
    cdef Py_ssize_t t, a, b, c, p, q, r
    cdef double xv
    out = np.zeros((n_out, P, R))
    cdef double[:, :, ::1] o = out
    with nogil:
        for t in range(ia.shape[0]):
            a = ia[t]
            b = ib[t]
            c = ic[t]
            for p in range(P):
                for q in range(Q):
                    xv = x[a, p, q]
                    if xv == 0.0:
                        continue
                    for r in range(R):
                        o[c, p, r] += xv * y[b, q, r]
    return out


def trace_words(const double[:, :, ::1] mats, const Py_ssize_t[:, ::1] words,
                const Py_ssize_t[::1] lengths):
    cdef Py_ssize_t m = mats.shape[1]
    cdef Py_ssize_t nw = words.shape[0]
    cdef Py_ssize_t w, s, i, j, k, L, letter
    cdef double acc
    cur_arr = np.empty((m, m))
    tmp_arr = np.empty((m, m))
    out_arr = np.empty(nw)
    cdef double[:, ::1] cur = cur_arr
    cdef double[:, ::1] tmp = tmp_arr
    cdef double[::1] out = out_arr
    with nogil:
        for w in range(nw):
            L = lengths[w]
            letter = words[w, 0]
            for i in range(m):
                for j in range(m):
                    cur[i, j] = mats[letter, i, j]
            for s in range(1, L):
                letter = words[w, s]
                for i in range(m):
                    for j in range(m):
                        acc = 0.0
                        for k in range(m):
                            acc = acc + cur[i, k] * mats[letter, k, j]
                        tmp[i, j] = acc
                for i in range(m):
                    for j in range(m):
                        cur[i, j] = tmp[i, j]
            acc = 0.0
            for i in range(m):
                acc = acc + cur[i, i]
            out[w] = acc
    return out_arr
