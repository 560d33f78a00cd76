# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled column-map kernels.

Same contract as ``_kernels_py`` (see its docstring for the encoding); the
loops here avoid the temporary (K, N) gather arrays of the numpy version.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64
ctypedef cnp.complex128_t c128


def compose(cnp.ndarray[i64, ndim=1] p1, cnp.ndarray[c128, ndim=1] v1,
            cnp.ndarray[i64, ndim=1] p2, cnp.ndarray[c128, ndim=1] v2):
    cdef Py_ssize_t n = p1.shape[0]
    cdef cnp.ndarray[i64, ndim=1] p = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[c128, ndim=1] v = np.zeros(n, dtype=np.complex128)
    cdef Py_ssize_t s
    cdef i64 t
    for s in range(n):
        t = p2[s]
        if t < 0 or p1[t] < 0:
            p[s] = -1
        else:
            p[s] = p1[t]
            v[s] = v1[t] * v2[s]
    return p, v


def compose_batch(cnp.ndarray[i64, ndim=2] P1, cnp.ndarray[c128, ndim=2] V1,
                  cnp.ndarray[i64, ndim=1] p2, cnp.ndarray[c128, ndim=1] v2):
    cdef Py_ssize_t k = P1.shape[0], n = P1.shape[1]
    cdef cnp.ndarray[i64, ndim=2] P = np.empty((k, n), dtype=np.int64)
    cdef cnp.ndarray[c128, ndim=2] V = np.zeros((k, n), dtype=np.complex128)
    cdef Py_ssize_t i, s
    cdef i64 t
    for i in range(k):
        for s in range(n):
            t = p2[s]
            if t < 0 or P1[i, t] < 0:
                P[i, s] = -1
            else:
                P[i, s] = P1[i, t]
                V[i, s] = V1[i, t] * v2[s]
    return P, V


def trace_batch(cnp.ndarray[i64, ndim=2] P, cnp.ndarray[c128, ndim=2] V):
    cdef Py_ssize_t k = P.shape[0], n = P.shape[1]
    cdef cnp.ndarray[c128, ndim=1] out = np.zeros(k, dtype=np.complex128)
    cdef Py_ssize_t i, s
    cdef c128 acc
    for i in range(k):
        acc = 0
        for s in range(n):
            if P[i, s] == s:
                acc = acc + V[i, s]
        out[i] = acc
    return out


def expect_batch(cnp.ndarray[i64, ndim=2] P, cnp.ndarray[c128, ndim=2] V,
                 cnp.ndarray[c128, ndim=2] D):
    cdef Py_ssize_t k = P.shape[0], n = P.shape[1]
    cdef cnp.ndarray[c128, ndim=1] out = np.zeros(k, dtype=np.complex128)
    cdef Py_ssize_t i, s
    cdef i64 t
    cdef c128 acc
    for i in range(k):
        acc = 0
        for s in range(n):
            t = P[i, s]
            if t >= 0:
                acc = acc + D[s, t] * V[i, s]
        out[i] = acc
    return out


def inner_batch(cnp.ndarray[i64, ndim=2] P, cnp.ndarray[c128, ndim=2] V,
                cnp.ndarray[c128, ndim=2] A):
    cdef Py_ssize_t k = P.shape[0], n = P.shape[1]
    cdef cnp.ndarray[c128, ndim=1] out = np.zeros(k, dtype=np.complex128)
    cdef Py_ssize_t i, s
    cdef i64 t
    cdef c128 acc
    for i in range(k):
        acc = 0
        for s in range(n):
            t = P[i, s]
            if t >= 0:
                acc = acc + V[i, s].conjugate() * A[t, s]
        out[i] = acc / n
    return out


def scatter(cnp.ndarray[i64, ndim=2] P, cnp.ndarray[c128, ndim=2] V,
            cnp.ndarray[c128, ndim=1] coeffs):
    cdef Py_ssize_t k = P.shape[0], n = P.shape[1]
    cdef cnp.ndarray[c128, ndim=2] out = np.zeros((n, n), dtype=np.complex128)
    cdef Py_ssize_t i, s
    cdef i64 t
    cdef c128 c
    for i in range(k):
        c = coeffs[i]
        if c == 0:
            continue
        for s in range(n):
            t = P[i, s]
            if t >= 0:
                out[t, s] = out[t, s] + c * V[i, s]
    return out


def pair_expect(cnp.ndarray[i64, ndim=2] Pa, cnp.ndarray[c128, ndim=2] Va,
                cnp.ndarray[i64, ndim=2] Pb, cnp.ndarray[c128, ndim=2] Vb,
                cnp.ndarray[c128, ndim=2] D):
    cdef Py_ssize_t ka = Pa.shape[0], kb = Pb.shape[0], n = Pb.shape[1]
    cdef cnp.ndarray[c128, ndim=2] out = np.zeros((ka, kb), dtype=np.complex128)
    cdef Py_ssize_t i, j, s
    cdef i64 t, u
    cdef c128 acc
    for i in range(ka):
        for j in range(kb):
            acc = 0
            for s in range(n):
                t = Pb[j, s]
                if t < 0:
                    continue
                u = Pa[i, t]
                if u < 0:
                    continue
                acc = acc + D[s, u] * Vb[j, s] * Va[i, t]
            out[i, j] = acc
    return out
