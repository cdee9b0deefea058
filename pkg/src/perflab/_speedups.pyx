# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: one dual coordinate descent pass and RBF kernel sums.

Every routine here has a numpy twin in ``_fallback`` with the same signature.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, sqrt

cnp.import_array()


def dcd_pass(const double[:, ::1] Q, double[::1] alpha, double[::1] grad,
             double upper, const Py_ssize_t[::1] order):
    """Visit the coordinates in ``order`` once, updating alpha and grad in place.

    Returns the number of coordinates whose value changed.
    """
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t k, i, j
    cdef double g, a, pg, new, delta
    cdef int changed = 0
    for k in range(order.shape[0]):
        i = order[k]
        g = grad[i]
        a = alpha[i]
        if a <= 0.0:
            pg = g if g < 0.0 else 0.0
        elif a >= upper:
            pg = g if g > 0.0 else 0.0
        else:
            pg = g
        if pg == 0.0:
            continue
        new = a - g / Q[i, i]
        if new < 0.0:
            new = 0.0
        elif new > upper:
            new = upper
        delta = new - a
        if delta == 0.0:
            continue
        alpha[i] = new
        changed += 1
        for j in range(n):
            grad[j] += delta * Q[i, j]
    return changed


cdef inline double _rbf(const double[:, ::1] A, Py_ssize_t i, const double[:, ::1] B,
                        Py_ssize_t j, double scale, bint squared) nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, diff
    for k in range(A.shape[1]):
        diff = A[i, k] - B[j, k]
        s += diff * diff
    if not squared:
        s = sqrt(s)
    return exp(-s * scale)


def gram_rbf(const double[:, ::1] A, const double[:, ::1] B, double sigma, bint squared):
    cdef Py_ssize_t na = A.shape[0], nb = B.shape[0]
    cdef Py_ssize_t i, j
    cdef double scale = 1.0 / (2.0 * sigma * sigma)
    out = np.empty((na, nb), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(na):
            for j in range(nb):
                o[i, j] = _rbf(A, i, B, j, scale, squared)
    return out


def predict_rbf(const double[:, ::1] S, const double[::1] beta, const double[:, ::1] X,
                double sigma, bint squared, double cutoff):
    """f(x_i) = sum_j beta_j K(s_j, x_i), summed in support order.

    Terms whose exponent exceeds ``cutoff`` are skipped.
    """
    cdef Py_ssize_t m = S.shape[0], nx = X.shape[0], dim = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double scale = 1.0 / (2.0 * sigma * sigma)
    cdef double acc, s, diff, limit
    # compare squared distances against the cutoff so skipped terms cost no sqrt
    limit = cutoff / scale
    if not squared:
        limit = limit * limit
    out = np.empty(nx, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(nx):
            acc = 0.0
            for j in range(m):
                s = 0.0
                for k in range(dim):
                    diff = X[i, k] - S[j, k]
                    s += diff * diff
                if s > limit:
                    continue
                if not squared:
                    s = sqrt(s)
                acc = acc + beta[j] * exp(-s * scale)
            o[i] = acc
    return out
