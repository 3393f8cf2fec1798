"""Calibration pipeline: constraints, likelihood, penalty, constrained MAP.

The curve coefficients get a zero-mean Gaussian prior over grid nodes;
every quote contributes a bid/ask tube constraint on an averaging
functional of the curve.  Hyperparameters maximize the unconstrained
observation likelihood, then the coefficients solve a convex QP: prior
quadratic plus noise-weighted repricing error plus (optionally) a
seasonality penalty that matches year-over-year curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from . import backend
from .curve import CurveModel, KernelParams, TimeGrid, obs_cov, prior_cov, window_weights
from .errors import ConfigError, InfeasibleMarketError, NumericalError
from .market import MarketSnapshot, delivery_months
from .qp import solve_box_qp

__all__ = [
    "ConstraintSystem",
    "SeasonPenalty",
    "FitReport",
    "build_constraints",
    "marginal_cov",
    "nll",
    "nll_grad",
    "fit_hyperparams",
    "build_season_penalty",
    "mismatch_stat",
    "check_feasibility",
    "solve_map",
    "repricing_tolerance",
]

KKT_TOL = 1e-8
VIOLATION_TOL = 1e-10
ACTIVATION_TOL = 1e-12

NM_XATOL = 1e-6
NM_MAX_ITER = 400
START_FRACTIONS = (0.125, 0.375, 0.625, 0.875)


@dataclass(frozen=True)
class ConstraintSystem:
    """Averaging matrix over grid nodes plus bid/ask bounds and noise.

    Row j reprices quote j: outright rows have nonnegative day-count
    weights summing to 1, spread rows sum to 0.
    """

    A: np.ndarray
    q_bid: np.ndarray
    q_ask: np.ndarray
    q_mid: np.ndarray
    Sigma: np.ndarray
    quote_ids: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def sigma2(self) -> np.ndarray:
        """Diagonal of the observation covariance."""
        return np.diag(self.Sigma).copy() if self.n else np.zeros(0)

    @property
    def pinned(self) -> np.ndarray:
        return self.q_bid == self.q_ask


@dataclass(frozen=True)
class FitReport:
    params: KernelParams | None = None
    nll: float | None = None
    iterations: int = 0
    converged: bool = False
    objective: float | None = None
    max_violation: float | None = None
    kkt_residual: float | None = None


def build_constraints(snapshot: MarketSnapshot, grid: TimeGrid) -> ConstraintSystem:
    """Assemble one averaging row per quote, mapped onto grid nodes."""
    n = len(snapshot.quotes)
    A = np.zeros((n, grid.n))
    for j, q in enumerate(snapshot.quotes):
        idx, w = window_weights(grid, delivery_months(q))
        np.add.at(A[j], idx, w)
    bid = np.array([q.bid for q in snapshot.quotes])
    ask = np.array([q.ask for q in snapshot.quotes])
    return ConstraintSystem(
        A=A,
        q_bid=bid,
        q_ask=ask,
        q_mid=0.5 * (bid + ask),
        Sigma=obs_cov(list(snapshot.quotes)),
        quote_ids=tuple(q.id for q in snapshot.quotes),
    )


def marginal_cov(cs: ConstraintSystem, grid: TimeGrid, params: KernelParams) -> np.ndarray:
    """Quote-space covariance C = Sigma + A Gamma A^T.

    Maturities sit on grid nodes, so the hat-basis factor reduces to
    node selection and the averaging rows act on Gamma directly.
    """
    if cs.n == 0:
        return np.zeros((0, 0))
    G = backend.gram(grid.times, params.sigma, params.theta)
    C = cs.A @ G @ cs.A.T + cs.Sigma
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        raise NumericalError("marginal covariance is not positive definite")
    return C


def nll(cs: ConstraintSystem, grid: TimeGrid, params: KernelParams) -> float:
    """Negative log marginal likelihood log det C + q^T C^-1 q.

    Evaluated through a Cholesky factorization; the explicit inverse is
    never formed.
    """
    val = backend.nll_terms(
        cs.A, grid.times, cs.sigma2, cs.q_mid, params.sigma, params.theta
    )
    if np.isnan(val):
        raise NumericalError("marginal covariance is not positive definite")
    return float(val)


def nll_grad(cs: ConstraintSystem, grid: TimeGrid, params: KernelParams) -> np.ndarray:
    """Gradient of :func:`nll` with respect to (log sigma, log theta).

    Closed form: d nll = tr(C^-1 dC) - alpha^T dC alpha with alpha =
    C^-1 q, dC/dlog sigma = 2 A Gamma A^T and dC/dlog theta scaling the
    kernel by squared distance over theta^2.
    """
    t = grid.times
    G = backend.gram(t, params.sigma, params.theta)
    M = cs.A @ G @ cs.A.T
    C = M + cs.Sigma
    cf = sla.cho_factor(C, lower=True, check_finite=False)
    alpha = sla.cho_solve(cf, cs.q_mid, check_finite=False)

    D = t[:, None] - t[None, :]
    dG_ltheta = G * (D * D) / (params.theta * params.theta)
    out = np.empty(2)
    for i, dC in enumerate((2.0 * M, cs.A @ dG_ltheta @ cs.A.T)):
        trace = float(np.trace(sla.cho_solve(cf, dC, check_finite=False)))
        out[i] = trace - float(alpha @ dC @ alpha)
    return out


def _nelder_mead(f, x0: np.ndarray, step: float) -> tuple[np.ndarray, float, int, bool]:
    """Deterministic 2-D Nelder-Mead; converges when the simplex diameter
    drops below NM_XATOL.  Returns (x_best, f_best, evals, converged)."""
    dim = x0.size
    simplex = [x0.copy()]
    for i in range(dim):
        v = x0.copy()
        v[i] += step
        simplex.append(v)
    values = [f(v) for v in simplex]
    evals = dim + 1

    for _ in range(NM_MAX_ITER):
        order = sorted(range(dim + 1), key=lambda i: (values[i], i))
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diam = max(
            float(np.max(np.abs(simplex[i] - simplex[0])))
            for i in range(1, dim + 1)
        )
        if diam < NM_XATOL:
            return simplex[0], values[0], evals, True

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        refl = centroid + (centroid - worst)
        f_refl = f(refl)
        evals += 1
        if values[0] <= f_refl < values[-2]:
            simplex[-1], values[-1] = refl, f_refl
            continue
        if f_refl < values[0]:
            exp = centroid + 2.0 * (centroid - worst)
            f_exp = f(exp)
            evals += 1
            if f_exp < f_refl:
                simplex[-1], values[-1] = exp, f_exp
            else:
                simplex[-1], values[-1] = refl, f_refl
            continue
        if f_refl < values[-1]:
            contr = centroid + 0.5 * (refl - centroid)
            f_contr = f(contr)
        else:
            contr = centroid + 0.5 * (worst - centroid)
            f_contr = f(contr)
        evals += 1
        if f_contr < min(f_refl, values[-1]):
            simplex[-1], values[-1] = contr, f_contr
            continue
        # shrink toward the best vertex
        for i in range(1, dim + 1):
            simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
            values[i] = f(simplex[i])
        evals += dim

    return simplex[0], values[0], evals, False


def fit_hyperparams(cs: ConstraintSystem, grid: TimeGrid) -> tuple[KernelParams, FitReport]:
    """Maximize the unconstrained observation likelihood over (sigma, theta).

    Deterministic direct search in log space from a fixed 4x4 start
    lattice over the box sigma in [1e-3 s, 10 s] (s = max |mid|), theta
    in [dt, t_N - t_1]; the best of the 16 local runs wins.
    """
    if cs.n < 2:
        raise ConfigError(f"hyperparameter fit needs at least 2 quotes, got {cs.n}")
    if grid.n < 2:
        raise ConfigError("hyperparameter fit needs at least 2 grid nodes")
    s = float(np.max(np.abs(cs.q_mid)))
    if s <= 0:
        raise ConfigError("all mid prices are zero; sigma box is empty")

    lo = np.log([1e-3 * s, grid.dt])
    hi = np.log([10.0 * s, grid.times[-1] - grid.times[0]])
    if not hi[1] > lo[1]:
        raise ConfigError("grid too short for a correlation-length box")

    times = grid.times
    A, sig2, q = cs.A, cs.sigma2, cs.q_mid

    def objective(u: np.ndarray) -> float:
        if np.any(u < lo) or np.any(u > hi):
            return np.inf
        val = backend.nll_terms(A, times, sig2, q, np.exp(u[0]), np.exp(u[1]))
        return np.inf if np.isnan(val) else val

    step = 0.05 * float(np.min(hi - lo))
    best_u, best_val, total_evals = None, np.inf, 0
    best_conv = False
    for fs in START_FRACTIONS:
        for ft in START_FRACTIONS:
            u0 = np.array([lo[0] + fs * (hi[0] - lo[0]), lo[1] + ft * (hi[1] - lo[1])])
            u, val, evals, conv = _nelder_mead(objective, u0, step)
            total_evals += evals
            if val < best_val:
                best_u, best_val, best_conv = u, val, conv
    if best_u is None or not np.isfinite(best_val):
        raise NumericalError("likelihood evaluation failed at every start point")

    params = KernelParams(float(np.exp(best_u[0])), float(np.exp(best_u[1])))
    report = FitReport(
        params=params, nll=float(best_val), iterations=total_evals, converged=best_conv
    )
    return params, report


@dataclass(frozen=True)
class SeasonPenalty:
    """Quadratic form matching curvature beyond year one to year one.

    ``xi^T P xi`` is the sum over contributing nodes of the squared
    difference between the second difference at node k and at the
    first-year node with the same calendar month; ``gamma`` scales the
    term inside the MAP objective.  12-month-periodic and linear
    coefficient vectors are annihilated.
    """

    gamma: float
    P: np.ndarray
    month_map: dict[int, int]


def _first_year_twin(i: int) -> int:
    """0-based index in [1, 12] of the first-year node sharing i's calendar month."""
    return i - 12 * ((i - 1) // 12)


def build_season_penalty(grid: TimeGrid, gamma: float) -> SeasonPenalty:
    """Assemble the curvature-matching penalty for nodes past one year.

    Boundary nodes are skipped (the second difference needs both
    neighbours); the first-year twin is chosen among interior nodes, so
    node 13 stands in for the calendar month of node 1.
    """
    if gamma < 0:
        raise ConfigError(f"penalty weight must be nonnegative, got {gamma}")
    if gamma > 0 and grid.n <= 13:
        raise ConfigError(
            f"seasonality penalty needs more than 13 nodes, grid has {grid.n}"
        )
    N = grid.n
    P = np.zeros((N, N))
    month_map: dict[int, int] = {}
    inv_dt2 = 1.0 / (grid.dt * grid.dt)
    for i in range(13, N - 1):  # t_i > 1y and interior
        m = _first_year_twin(i)
        if m < 1 or m > N - 2:
            continue
        d = np.zeros(N)
        d[i - 1] += inv_dt2
        d[i] -= 2.0 * inv_dt2
        d[i + 1] += inv_dt2
        d[m - 1] -= inv_dt2
        d[m] += 2.0 * inv_dt2
        d[m + 1] -= inv_dt2
        P += np.outer(d, d)
        month_map[i] = m
    return SeasonPenalty(gamma=gamma, P=P, month_map=month_map)


def mismatch_stat(penalty: SeasonPenalty, xi: np.ndarray) -> float:
    """Sum of squared year-over-year second-difference mismatches."""
    xi = np.asarray(xi, dtype=np.float64)
    return float(xi @ penalty.P @ xi)


def repricing_tolerance(q_mid: np.ndarray) -> np.ndarray:
    """Per-quote tolerance 1e-10 (1 + |mid|) used across QP and rejection."""
    return VIOLATION_TOL * (1.0 + np.abs(q_mid))


def check_feasibility(
    cs: ConstraintSystem, feas_tol: float | None = None
) -> tuple[bool, float]:
    """Maximize the worst-case margin inside the bid/ask tubes via an LP.

    Pinned rows (bid == ask) enter as equalities.  Returns (feasible,
    margin); a negative margin measures how deeply the quotes cross.
    """
    n, N = cs.A.shape
    if n == 0:
        return True, np.inf
    if feas_tol is None:
        feas_tol = 1e-9 * (1.0 + float(np.max(np.abs(cs.q_mid))))
    pinned = cs.pinned
    free = ~pinned
    half = 0.5 * (cs.q_ask - cs.q_bid)
    cap = float(np.min(half[free])) if free.any() else 1.0

    # variables [xi, delta], maximize delta
    c_vec = np.zeros(N + 1)
    c_vec[-1] = -1.0
    A_ub, b_ub = [], []
    if free.any():
        Af = cs.A[free]
        A_ub.append(np.hstack([-Af, np.ones((Af.shape[0], 1))]))
        b_ub.append(-cs.q_bid[free])
        A_ub.append(np.hstack([Af, np.ones((Af.shape[0], 1))]))
        b_ub.append(cs.q_ask[free])
    kwargs = {}
    if pinned.any():
        kwargs["A_eq"] = np.hstack([cs.A[pinned], np.zeros((int(pinned.sum()), 1))])
        kwargs["b_eq"] = cs.q_bid[pinned]
    res = linprog(
        c_vec,
        A_ub=np.vstack(A_ub) if A_ub else None,
        b_ub=np.concatenate(b_ub) if b_ub else None,
        bounds=[(None, None)] * N + [(None, cap)],
        method="highs",
        **kwargs,
    )
    if res.status == 2:
        return False, -np.inf
    if not res.success:
        raise NumericalError(f"feasibility LP failed: {res.message}")
    margin = float(res.x[-1])
    return margin >= -feas_tol, margin


def _violating_subset(cs: ConstraintSystem) -> tuple[str, ...]:
    """Greedy removal: repeatedly drop the quote whose removal most
    improves the feasibility margin until the rest is consistent."""
    keep = list(range(cs.n))
    removed: list[int] = []
    while keep:
        sub = _subsystem(cs, keep)
        ok, _ = check_feasibility(sub)
        if ok:
            break
        best_j, best_margin = None, -np.inf
        for j in keep:
            trial = [k for k in keep if k != j]
            if not trial:
                margin = np.inf
            else:
                _, margin = check_feasibility(_subsystem(cs, trial))
            if margin > best_margin:
                best_j, best_margin = j, margin
        removed.append(best_j)
        keep.remove(best_j)
    return tuple(cs.quote_ids[j] for j in removed)


def _subsystem(cs: ConstraintSystem, rows: list[int]) -> ConstraintSystem:
    idx = np.asarray(rows, dtype=np.intp)
    return ConstraintSystem(
        A=cs.A[idx],
        q_bid=cs.q_bid[idx],
        q_ask=cs.q_ask[idx],
        q_mid=cs.q_mid[idx],
        Sigma=cs.Sigma[np.ix_(idx, idx)],
        quote_ids=tuple(cs.quote_ids[j] for j in rows),
    )


def posterior_precision(
    cs: ConstraintSystem,
    grid: TimeGrid,
    params: KernelParams,
    penalty: SeasonPenalty | None = None,
) -> np.ndarray:
    """Posterior precision Gamma^-1 + A^T Sigma^-1 A + gamma P (1/2 convention)."""
    Gbar = prior_cov(grid, params)
    cf = sla.cho_factor(Gbar, lower=True, check_finite=False)
    Ginv = sla.cho_solve(cf, np.eye(grid.n), check_finite=False)
    H = 0.5 * (Ginv + Ginv.T)
    if cs.n:
        H = H + (cs.A.T / cs.sigma2) @ cs.A
    if penalty is not None and penalty.gamma > 0:
        H = H + penalty.gamma * penalty.P
    return 0.5 * (H + H.T)


def solve_map(
    cs: ConstraintSystem,
    grid: TimeGrid,
    params: KernelParams,
    penalty: SeasonPenalty | None = None,
) -> tuple[CurveModel, FitReport]:
    """Constrained posterior mode: convex QP inside the bid/ask tubes.

    Minimizes xi' Gbar^-1 xi + (A xi - q)' Sigma^-1 (A xi - q) +
    gamma xi' P xi subject to bid <= A xi <= ask.  Infeasible quote
    systems raise :class:`InfeasibleMarketError` naming a violating
    subset found by greedy removal.
    """
    feasible, _ = check_feasibility(cs)
    if not feasible:
        subset = _violating_subset(cs)
        raise InfeasibleMarketError(
            f"quotes admit no arbitrage-free curve; violating subset: "
            f"{', '.join(subset)}",
            quote_ids=subset,
        )

    H = posterior_precision(cs, grid, params, penalty)
    # convexity assertion: the QP factorizes 2H or fails loudly
    q = cs.q_mid
    if cs.n:
        c = -2.0 * (cs.A.T @ (q / cs.sigma2))
        act_tol = ACTIVATION_TOL * (1.0 + np.abs(q))
        result = solve_box_qp(2.0 * H, c, cs.A, cs.q_bid, cs.q_ask, tol=act_tol)
    else:
        c = np.zeros(grid.n)
        result = solve_box_qp(2.0 * H, c, np.zeros((0, grid.n)), np.zeros(0), np.zeros(0))

    xi = result.x
    if result.kkt_residual > KKT_TOL:
        raise NumericalError(
            f"QP stationarity residual {result.kkt_residual:.2e} exceeds {KKT_TOL:g} "
            f"after {result.iterations} iterations"
        )
    tol = repricing_tolerance(q)
    if cs.n:
        prices = cs.A @ xi
        viol = np.maximum(cs.q_bid - prices, prices - cs.q_ask)
        worst = float(np.max(viol - tol))
        if worst > 0:
            raise NumericalError(
                f"repricing violation exceeds tolerance by {worst:.2e}"
            )
        max_violation = float(np.max(np.maximum(viol, 0.0)))
    else:
        max_violation = 0.0

    gamma = penalty.gamma if penalty is not None else 0.0
    Gbar = prior_cov(grid, params)
    cf = sla.cho_factor(Gbar, lower=True, check_finite=False)
    objective = float(xi @ sla.cho_solve(cf, xi, check_finite=False))
    if cs.n:
        resid = cs.A @ xi - q
        objective += float(resid @ (resid / cs.sigma2))
    if penalty is not None and penalty.gamma > 0:
        objective += penalty.gamma * mismatch_stat(penalty, xi)

    model = CurveModel(
        grid=grid,
        params=params,
        xi=xi,
        gamma=gamma,
        seasonality_enabled=penalty is not None and penalty.gamma > 0,
    )
    report = FitReport(
        params=params,
        iterations=result.iterations,
        converged=True,
        objective=objective,
        max_violation=max_violation,
        kkt_residual=result.kkt_residual,
    )
    return model, report
