# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trigonometric-polynomial kernels (see ``_pykernels`` for semantics)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, M_PI

cnp.import_array()


def eval_points(points, freqs, double c0, xc, yc):
    cdef const double[:, ::1] P = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] F = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(xc, dtype=np.float64)
    cdef const double[::1] Y = np.ascontiguousarray(yc, dtype=np.float64)
    cdef Py_ssize_t n = P.shape[0], d = P.shape[1], k = F.shape[0]
    cdef Py_ssize_t i, j, m
    cdef double phase, acc
    cdef double two_pi = 2.0 * M_PI
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] O = out
    for i in range(n):
        acc = c0
        for m in range(k):
            phase = 0.0
            for j in range(d):
                phase += P[i, j] * F[m, j]
            phase *= two_pi
            acc += X[m] * cos(phase) - Y[m] * sin(phase)
        O[i] = acc
    return out


def eval_derivatives(point, freqs, double c0, xc, yc):
    cdef const double[::1] A = np.ascontiguousarray(point, dtype=np.float64)
    cdef const double[:, ::1] F = np.ascontiguousarray(freqs, dtype=np.float64)
    cdef const double[::1] X = np.ascontiguousarray(xc, dtype=np.float64)
    cdef const double[::1] Y = np.ascontiguousarray(yc, dtype=np.float64)
    cdef Py_ssize_t d = A.shape[0], k = F.shape[0]
    cdef Py_ssize_t j, l, m
    cdef double phase, cs, sn, first, second, value = c0
    cdef double two_pi = 2.0 * M_PI
    grad = np.zeros(d, dtype=np.float64)
    hess = np.zeros((d, d), dtype=np.float64)
    cdef double[::1] G = grad
    cdef double[:, ::1] H = hess
    for m in range(k):
        phase = 0.0
        for j in range(d):
            phase += A[j] * F[m, j]
        phase *= two_pi
        cs = cos(phase)
        sn = sin(phase)
        value += X[m] * cs - Y[m] * sn
        first = -(X[m] * sn + Y[m] * cs)
        second = -(X[m] * cs - Y[m] * sn)
        for j in range(d):
            G[j] += first * two_pi * F[m, j]
            for l in range(d):
                H[j, l] += second * two_pi * two_pi * F[m, j] * F[m, l]
    return value, grad, hess
