"""Pure-numpy reference implementations of the hot numerical kernels.

The compiled extension (:mod:`termkrig._core`) mirrors these signatures;
:mod:`termkrig.backend` picks one of the two at import time.
"""

import numpy as np
import scipy.linalg as sla


def gram(times, sigma, theta):
    """Stationary Gaussian-kernel covariance sigma^2 * exp(-d^2 / (2 theta^2))."""
    t = np.asarray(times, dtype=np.float64)
    d = t[:, None] - t[None, :]
    return sigma * sigma * np.exp(-(d * d) / (2.0 * theta * theta))


def cross_gram(t1, t2, sigma, theta):
    """Rectangular covariance block between two sets of times."""
    a = np.asarray(t1, dtype=np.float64)
    b = np.asarray(t2, dtype=np.float64)
    d = a[:, None] - b[None, :]
    return sigma * sigma * np.exp(-(d * d) / (2.0 * theta * theta))


def nll_terms(A, times, sig2, q, sigma, theta):
    """log det C + q^T C^-1 q for C = diag(sig2) + A Gamma A^T.

    Returns NaN when C fails to factorize, so optimizer loops can treat
    the point as unusable without exception overhead.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if n == 0:
        return 0.0
    G = gram(times, sigma, theta)
    C = A @ G @ A.T
    C[np.diag_indices(n)] += sig2
    try:
        L = sla.cholesky(C, lower=True, check_finite=False)
    except sla.LinAlgError:
        return float("nan")
    logdet = 2.0 * float(np.sum(np.log(np.diag(L))))
    z = sla.solve_triangular(L, q, lower=True, check_finite=False)
    return logdet + float(z @ z)
