"""Dual active-set solver for strictly convex quadratic programs.

Solves  min 1/2 x^T H x + c^T x  subject to  lo <= A x <= hi, where rows
with lo == hi act as equalities.  The method starts from the
unconstrained minimizer and adds violated constraints one at a time,
taking dual steps that keep the working-set multipliers sign-feasible
(Goldfarb-Idnani).  On exit the working-set rows hold with the accuracy
of a single linear solve and every other row is violated by at most the
activation tolerance, which is what makes tight repricing tolerances
attainable.

H must be positive definite; it is factorized once and reused for every
step computation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NumericalError

__all__ = ["QPResult", "solve_box_qp"]

MAX_ITER_FACTOR = 50


@dataclass
class QPResult:
    x: np.ndarray
    iterations: int
    kkt_residual: float
    max_violation: float
    # active one-sided constraints as (row, side) with side +1 for the
    # lower bound and -1 for the upper bound
    active: list[tuple[int, int]] = field(default_factory=list)
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


class _Factor:
    """Cholesky factor of H with cached solves against active normals."""

    def __init__(self, H: np.ndarray):
        try:
            self.cf = sla.cho_factor(H, lower=True, check_finite=False)
        except sla.LinAlgError:
            raise NumericalError("QP Hessian is not positive definite")

    def solve(self, b: np.ndarray) -> np.ndarray:
        return sla.cho_solve(self.cf, b, check_finite=False)


def _expand(A, lo, hi):
    """One-sided rows n^T x >= b; equalities (lo == hi) listed first.

    Returns (normals, offsets, is_eq, origin) where origin[k] = (row, side).
    """
    rows, offs, eqs, origin = [], [], [], []
    for j in range(A.shape[0]):
        if lo[j] == hi[j]:
            rows.append(A[j])
            offs.append(lo[j])
            eqs.append(True)
            origin.append((j, 0))
    for j in range(A.shape[0]):
        if lo[j] == hi[j]:
            continue
        if np.isfinite(lo[j]):
            rows.append(A[j])
            offs.append(lo[j])
            eqs.append(False)
            origin.append((j, 1))
        if np.isfinite(hi[j]):
            rows.append(-A[j])
            offs.append(-hi[j])
            eqs.append(False)
            origin.append((j, -1))
    if rows:
        N = np.vstack(rows)
    else:
        N = np.zeros((0, A.shape[1]))
    return N, np.array(offs), np.array(eqs, dtype=bool), origin


def solve_box_qp(
    H: np.ndarray,
    c: np.ndarray,
    A: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    tol: np.ndarray | float = 1e-12,
) -> QPResult:
    """Minimize 1/2 x^T H x + c^T x subject to lo <= A x <= hi.

    ``tol`` is the per-row activation tolerance: a row is considered
    satisfied while its one-sided slack stays above -tol.  Scalars
    broadcast over rows.  Raises :class:`NumericalError` when a step
    cannot be computed (dependent normals with no droppable constraint,
    or iteration blow-up), which for a pre-checked feasible system
    indicates numerical trouble rather than infeasibility.
    """
    H = np.asarray(H, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64).reshape(-1, H.shape[0])
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    tol_rows = np.broadcast_to(np.asarray(tol, dtype=np.float64), lo.shape)

    fac = _Factor(H)
    x = fac.solve(-c)

    N, b, is_eq, origin = _expand(A, lo, hi)
    m = N.shape[0]
    if m == 0:
        g = H @ x + c
        res = _scaled_residual(g, H, x, c)
        return QPResult(x, 0, res, 0.0, [], np.zeros(0))
    tol_sided = np.array([tol_rows[origin[k][0]] for k in range(m)])

    active: list[int] = []
    lam: list[float] = []
    # sign flip applied to equality rows entering from the >= side
    flip = np.ones(m)

    max_iter = MAX_ITER_FACTOR * (m + H.shape[0])
    iterations = 0

    while True:
        iterations += 1
        if iterations > max_iter:
            raise NumericalError(
                f"QP active-set iteration limit hit ({max_iter}); "
                f"working set size {len(active)}"
            )

        s = N @ x - b
        # equalities must hold both ways; inequalities only from below
        viol = np.where(is_eq, -np.abs(s), s)
        viol[active] = np.inf  # members are handled by the dual steps
        p = int(np.argmin(viol))
        if viol[p] >= -tol_sided[p]:
            break

        n_p = N[p].copy()
        b_p = b[p]
        flip[p] = 1.0
        if is_eq[p] and s[p] > 0:
            n_p = -n_p
            b_p = -b_p
            flip[p] = -1.0
        u_p = 0.0

        # inner loop: bring constraint p into the working set
        while True:
            iterations += 1
            if iterations > max_iter:
                raise NumericalError(
                    f"QP active-set iteration limit hit ({max_iter}); "
                    f"working set size {len(active)}"
                )
            if active:
                Nw = (N[active] * flip[active][:, None])
                W = fac.solve(Nw.T)  # H^-1 Nw^T
                w = fac.solve(n_p)
                M = Nw @ W
                try:
                    r = sla.solve(M, Nw @ w, assume_a="sym", check_finite=False)
                except sla.LinAlgError:
                    raise NumericalError("QP working-set system is singular")
                z = w - W @ r
            else:
                r = np.zeros(0)
                z = fac.solve(n_p)

            denom = float(n_p @ z)
            znorm = float(np.linalg.norm(z, np.inf))
            dependent = denom <= 1e-14 * max(1.0, float(n_p @ n_p)) or znorm == 0.0

            # dual ratio test over droppable (inequality) members
            t1 = np.inf
            k_drop = -1
            for i, k in enumerate(active):
                if is_eq[k] or r[i] <= 0.0:
                    continue
                ratio = lam[i] / r[i]
                if ratio < t1:
                    t1 = ratio
                    k_drop = i

            if dependent:
                if not np.isfinite(t1):
                    raise NumericalError(
                        "QP constraint normals are dependent with no "
                        "droppable working-set member (infeasible or "
                        "ill-conditioned system)"
                    )
                t = t1
            else:
                s_p = float(n_p @ x - b_p)
                t2 = -s_p / denom
                t = min(t1, t2)

            if np.isfinite(t) and t > 0:
                if not dependent:
                    x = x + t * z
                for i in range(len(active)):
                    lam[i] -= t * r[i]
                u_p += t

            if not dependent and t == t2:
                active.append(p)
                lam.append(u_p)
                break
            # partial step: drop the blocking constraint and retry
            del active[k_drop]
            del lam[k_drop]

    # polish: re-anchor x on the final working set with one KKT solve
    if active:
        Nw = N[active] * flip[active][:, None]
        bw = b[active] * flip[active]
        W = fac.solve(Nw.T)
        M = Nw @ W
        rhs = bw - Nw @ fac.solve(-c)
        y = sla.solve(M, rhs, assume_a="sym", check_finite=False)
        x = fac.solve(-c) + W @ y
        lam_arr = np.asarray(y)
    else:
        lam_arr = np.zeros(0)

    g = H @ x + c
    if active:
        g_res = g - (N[active] * flip[active][:, None]).T @ lam_arr
    else:
        g_res = g
    res = _scaled_residual(g_res, H, x, c)

    s = N @ x - b
    viol = np.where(is_eq, np.abs(s), np.maximum(0.0, -s))
    max_violation = float(viol.max()) if m else 0.0

    act_sides = [origin[k] for k in active]
    return QPResult(x, iterations, res, max_violation, act_sides, lam_arr)


def _scaled_residual(g_res, H, x, c):
    # backward-error scaling: residual relative to the magnitude of the
    # terms entering the stationarity equation, not their cancelled sum
    scale = (
        1.0
        + float(np.linalg.norm(H, np.inf)) * float(np.linalg.norm(x, np.inf))
        + float(np.linalg.norm(c, np.inf))
    )
    return float(np.linalg.norm(g_res, np.inf)) / scale
