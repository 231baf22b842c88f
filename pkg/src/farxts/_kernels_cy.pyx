# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: Cox-de Boor basis evaluation and the NIPALS power step.

Mirrors :mod:`farxts._kernels_py` exactly; see that module for the contracts.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


cdef Py_ssize_t _find_span(const double[:] knots, Py_ssize_t n_basis,
                           Py_ssize_t degree, double x) nogil:
    cdef Py_ssize_t low, high, mid
    if x >= knots[n_basis]:
        return n_basis - 1
    if x <= knots[degree]:
        low = degree
        while low < n_basis - 1 and knots[low + 1] <= x:
            low += 1
        return low
    low = degree
    high = n_basis
    mid = (low + high) // 2
    while x < knots[mid] or x >= knots[mid + 1]:
        if x < knots[mid]:
            high = mid
        else:
            low = mid
        mid = (low + high) // 2
    return mid


def bspline_basis(const double[:] knots, int order, const double[:] points):
    cdef Py_ssize_t n_basis = knots.shape[0] - order
    cdef Py_ssize_t degree = order - 1
    cdef Py_ssize_t n_pts = points.shape[0]
    out = np.zeros((n_pts, n_basis), dtype=np.float64)
    cdef double[:, :] res = out
    cdef double[:] vals = np.empty(order, dtype=np.float64)
    cdef double[:] left = np.empty(order, dtype=np.float64)
    cdef double[:] right = np.empty(order, dtype=np.float64)
    cdef Py_ssize_t j, r, p, span
    cdef double x, saved, temp
    with nogil:
        for p in range(n_pts):
            x = points[p]
            span = _find_span(knots, n_basis, degree, x)
            vals[0] = 1.0
            for j in range(1, order):
                left[j] = x - knots[span + 1 - j]
                right[j] = knots[span + j] - x
                saved = 0.0
                for r in range(j):
                    temp = vals[r] / (right[r + 1] + left[j - r])
                    vals[r] = saved + right[r + 1] * temp
                    saved = left[j - r] * temp
                vals[j] = saved
            for j in range(order):
                res[p, span - degree + j] = vals[j]
    return out


def nipals_weights(const double[:, :] Z, const double[:, :] Y,
                   double tol, int max_iter):
    cdef Py_ssize_t n = Z.shape[0]
    cdef Py_ssize_t p = Z.shape[1]
    cdef Py_ssize_t q = Y.shape[1]
    w_arr = np.zeros(p, dtype=np.float64)
    cdef double[:] w = w_arr
    cdef double[:] w_old = np.zeros(p, dtype=np.float64)
    cdef double[:] u = np.zeros(n, dtype=np.float64)
    cdef double[:] t = np.zeros(n, dtype=np.float64)
    cdef double[:] c = np.zeros(q, dtype=np.float64)
    cdef Py_ssize_t i, j, k, best = 0
    cdef int it = 0
    cdef double s, best_ss = -1.0, norm, tt, cc, delta

    with nogil:
        for k in range(q):
            s = 0.0
            for i in range(n):
                s += Y[i, k] * Y[i, k]
            if s > best_ss:
                best_ss = s
                best = k
        for i in range(n):
            u[i] = Y[i, best]

        while it < max_iter:
            it += 1
            norm = 0.0
            for j in range(p):
                s = 0.0
                for i in range(n):
                    s += Z[i, j] * u[i]
                w[j] = s
                norm += s * s
            if norm <= 0.0:
                break
            norm = sqrt(norm)
            for j in range(p):
                w[j] /= norm
            tt = 0.0
            for i in range(n):
                s = 0.0
                for j in range(p):
                    s += Z[i, j] * w[j]
                t[i] = s
                tt += s * s
            cc = 0.0
            for k in range(q):
                s = 0.0
                for i in range(n):
                    s += Y[i, k] * t[i]
                c[k] = s / tt
                cc += c[k] * c[k]
            for i in range(n):
                s = 0.0
                for k in range(q):
                    s += Y[i, k] * c[k]
                u[i] = s / cc
            delta = 0.0
            for j in range(p):
                delta += (w[j] - w_old[j]) * (w[j] - w_old[j])
                w_old[j] = w[j]
            if sqrt(delta) < tol:
                break
    return w_arr, it
