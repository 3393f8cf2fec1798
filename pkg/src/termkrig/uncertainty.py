"""Posterior uncertainty bands by rejection sampling.

Samples the unconstrained Gaussian posterior of the node coefficients,
drops draws that leave any bid/ask tube, and reports per-node empirical
quantiles.  Pinned quotes (bid == ask) are handled by exact Gaussian
conditioning instead of rejection: a tube of zero width would reject
almost surely, while conditioning is its exact limit.

Sampling is organized in fixed-size blocks, each drawing from a
counter-based generator keyed by (seed, block index), so blocks could be
generated in parallel and merged in block order without changing the
result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .calibrate import ConstraintSystem, repricing_tolerance
from .curve import TimeGrid, window_weights
from .errors import NumericalError, ValidationError

__all__ = ["PosteriorSpec", "PosteriorBand", "sample_posterior", "band_for_window"]

DEFAULT_QUANTILES = (0.1587, 0.8413)
BLOCK = 4096
MIN_ACCEPTANCE = 1e-3
MIN_KEPT = 100


@dataclass(frozen=True)
class PosteriorSpec:
    """Unconstrained posterior N(mean, precision^-1) plus sampling plan."""

    mean: np.ndarray
    precision: np.ndarray
    seed: int
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValidationError("n_samples must be positive")
        if self.precision.shape != (self.mean.size, self.mean.size):
            raise ValidationError("precision shape does not match mean")


@dataclass(frozen=True)
class PosteriorBand:
    """Per-node quantile envelope over accepted posterior samples."""

    lower: np.ndarray
    upper: np.ndarray
    acceptance_rate: float
    samples_kept: int
    quantiles: tuple[float, float]
    samples: np.ndarray  # kept draws, shape (samples_kept, n_nodes)


def _draw_block(seed: int, block: int, n_nodes: int, size: int) -> np.ndarray:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(block)])
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.standard_normal((n_nodes, size))


def sample_posterior(
    spec: PosteriorSpec,
    cs: ConstraintSystem,
    quantiles: tuple[float, float] = DEFAULT_QUANTILES,
) -> PosteriorBand:
    """Draw, reject against the quote tubes, and take node quantiles.

    Rejection uses the same per-quote tolerance as the MAP solver, so
    the calibrated curve itself always counts as acceptable.  Raises
    :class:`NumericalError` when fewer than 0.1% of draws survive or
    fewer than 100 samples remain.
    """
    ql, qu = quantiles
    if not (0.0 < ql < qu < 1.0):
        raise ValidationError(f"invalid quantile pair ({ql}, {qu})")
    N = spec.mean.size
    try:
        L = np.linalg.cholesky(spec.precision)
    except np.linalg.LinAlgError:
        raise NumericalError("posterior precision is not positive definite")

    # exact conditioning on pinned rows
    pinned = cs.pinned if cs.n else np.zeros(0, dtype=bool)
    project = None
    if cs.n and pinned.any():
        A_eq = cs.A[pinned]
        c_eq = cs.q_mid[pinned]
        # H^-1 A_eq^T through the factor of H
        J = sla.cho_solve((L, True), A_eq.T, check_finite=False)
        S = A_eq @ J
        try:
            S_cf = sla.cho_factor(S, lower=True, check_finite=False)
        except sla.LinAlgError:
            raise NumericalError("pinned quotes are mutually inconsistent")

        def project(X):
            resid = A_eq @ X - c_eq[:, None]
            return X - J @ sla.cho_solve(S_cf, resid, check_finite=False)

    tol = repricing_tolerance(cs.q_mid) if cs.n else np.zeros(0)
    lo = cs.q_bid - tol if cs.n else None
    hi = cs.q_ask + tol if cs.n else None

    kept_blocks = []
    total = 0
    block = 0
    remaining = spec.n_samples
    while remaining > 0:
        size = min(BLOCK, remaining)
        Z = _draw_block(spec.seed, block, N, size)
        X = spec.mean[:, None] + sla.solve_triangular(
            L, Z, lower=True, trans="T", check_finite=False
        )
        if project is not None:
            X = project(X)
        if cs.n:
            V = cs.A @ X
            ok = np.all((V >= lo[:, None]) & (V <= hi[:, None]), axis=0)
            kept_blocks.append(X[:, ok])
        else:
            kept_blocks.append(X)
        total += size
        remaining -= size
        block += 1

    kept = np.hstack(kept_blocks).T
    acceptance = kept.shape[0] / total
    if acceptance < MIN_ACCEPTANCE:
        raise NumericalError(
            f"acceptance rate {acceptance:.2e} below {MIN_ACCEPTANCE:g}; the "
            "band is degenerate, increase n_samples or widen the model"
        )
    if kept.shape[0] < MIN_KEPT:
        raise NumericalError(
            f"only {kept.shape[0]} samples accepted (< {MIN_KEPT}); "
            "increase n_samples"
        )
    lower, upper = np.quantile(kept, [ql, qu], axis=0, method="linear")
    return PosteriorBand(
        lower=lower,
        upper=upper,
        acceptance_rate=acceptance,
        samples_kept=kept.shape[0],
        quantiles=(ql, qu),
        samples=kept,
    )


def band_for_window(band: PosteriorBand, grid: TimeGrid, months) -> tuple[float, float]:
    """Quantile envelope of a delivery window's repriced value.

    Prices every kept sample over the window (day-count weights, signed
    legs for spreads) and takes the band's quantile pair.
    """
    idx, w = window_weights(grid, months)
    prices = band.samples[:, idx] @ w
    lo, hi = np.quantile(prices, list(band.quantiles), method="linear")
    return float(lo), float(hi)
