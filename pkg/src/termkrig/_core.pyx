# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Gram assembly and marginal-likelihood evaluation.

Mirrors termkrig._ref; selected by termkrig.backend when built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, isnan
from scipy.linalg.cython_blas cimport dgemm, dtrsv
from scipy.linalg.cython_lapack cimport dpotrf

cnp.import_array()


cdef void _fill_gram(double[:, ::1] out, double[::1] t1, double[::1] t2,
                     double sigma, double theta) noexcept nogil:
    # same operation order as the numpy reference so both backends agree
    # to the last bit
    cdef Py_ssize_t i, j
    cdef double s2 = sigma * sigma
    cdef double denom = 2.0 * theta * theta
    cdef double d
    for i in range(t1.shape[0]):
        for j in range(t2.shape[0]):
            d = t1[i] - t2[j]
            out[i, j] = s2 * exp(-(d * d) / denom)


cdef void _fill_gram_sym(double[:, ::1] out, double[::1] t,
                         double sigma, double theta) noexcept nogil:
    # square case: fill the upper triangle and mirror (exp is the cost)
    cdef Py_ssize_t i, j
    cdef double s2 = sigma * sigma
    cdef double denom = 2.0 * theta * theta
    cdef double d, v
    for i in range(t.shape[0]):
        out[i, i] = s2
        for j in range(i + 1, t.shape[0]):
            d = t[i] - t[j]
            v = s2 * exp(-(d * d) / denom)
            out[i, j] = v
            out[j, i] = v


def gram(times, double sigma, double theta):
    """Stationary Gaussian-kernel covariance sigma^2 * exp(-d^2 / (2 theta^2))."""
    cdef double[::1] t = np.ascontiguousarray(times, dtype=np.float64)
    out = np.empty((t.shape[0], t.shape[0]), dtype=np.float64)
    cdef double[:, ::1] o = out
    _fill_gram_sym(o, t, sigma, theta)
    return out


def cross_gram(t1, t2, double sigma, double theta):
    """Rectangular covariance block between two sets of times."""
    cdef double[::1] a = np.ascontiguousarray(t1, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(t2, dtype=np.float64)
    out = np.empty((a.shape[0], b.shape[0]), dtype=np.float64)
    cdef double[:, ::1] o = out
    _fill_gram(o, a, b, sigma, theta)
    return out


def nll_terms(A, times, sig2, q, double sigma, double theta):
    """log det C + q^T C^-1 q for C = diag(sig2) + A Gamma A^T; NaN if not PD."""
    cdef double[:, ::1] Am = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(times, dtype=np.float64)
    cdef double[::1] s2 = np.ascontiguousarray(sig2, dtype=np.float64)
    cdef double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef int n = Am.shape[0]
    cdef int N = Am.shape[1]
    if n == 0:
        return 0.0

    G_arr = np.empty((N, N), dtype=np.float64)
    cdef double[:, ::1] G = G_arr
    _fill_gram_sym(G, t, sigma, theta)

    AG_arr = np.empty((n, N), dtype=np.float64)
    C_arr = np.empty((n, n), dtype=np.float64)
    z_arr = np.array(qv, dtype=np.float64, copy=True)
    cdef double[:, ::1] AG = AG_arr
    cdef double[:, ::1] C = C_arr
    cdef double[::1] z = z_arr

    cdef double one = 1.0, zero = 0.0
    cdef int info = 0, incx = 1
    cdef Py_ssize_t i
    cdef double logdet = 0.0, quad = 0.0

    with nogil:
        # BLAS is column-major; with row-major buffers compute the
        # transposed products instead. AG := A G  (G symmetric).
        dgemm("N", "N", &N, &n, &N, &one, &G[0, 0], &N, &Am[0, 0], &N,
              &zero, &AG[0, 0], &N)
        # C := AG A^T
        dgemm("T", "N", &n, &n, &N, &one, &AG[0, 0], &N, &Am[0, 0], &N,
              &zero, &C[0, 0], &n)
        for i in range(n):
            C[i, i] = C[i, i] + s2[i]
        # Lower Cholesky of row-major C is "U" in column-major view.
        dpotrf("U", &n, &C[0, 0], &n, &info)
        if info == 0:
            for i in range(n):
                logdet += log(C[i, i])
            logdet *= 2.0
            # Solve L z = q: row-major lower triangle == column-major upper transpose.
            dtrsv("U", "T", "N", &n, &C[0, 0], &n, &z[0], &incx)
            for i in range(n):
                quad += z[i] * z[i]

    if info != 0:
        return float("nan")
    return logdet + quad
