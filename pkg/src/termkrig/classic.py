"""Classical kriging baseline: interpolate one-month mid prices only.

The baseline sees nothing but the monthly quotes' mids: no bid/ask
widths, no quarters, seasons, years or spreads.  With a zero prior mean
the predictor decays toward zero beyond the last quote; that long-end
behaviour is the known weakness of the approach and is deliberately left
unpatched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import backend
from .curve import DT, KernelParams
from .errors import ConfigError, NumericalError, ValidationError
from .market import MarketSnapshot, Month

__all__ = ["BenchmarkModel", "fit_benchmark", "eval_benchmark", "benchmark_window"]

DEFAULT_NUGGET_FACTOR = 1e-10


@dataclass(frozen=True)
class BenchmarkModel:
    """Kriging interpolant of monthly mids: k(T)' (K + nugget I)^-1 mids."""

    origin: Month
    maturities: np.ndarray
    mids: np.ndarray
    params: KernelParams
    nugget: float
    weights: np.ndarray

    def __post_init__(self):
        if self.maturities.size < 2:
            raise ConfigError("benchmark needs at least 2 monthly quotes")
        if np.any(np.diff(self.maturities) <= 0):
            raise ValidationError("benchmark maturities must be strictly increasing")


def fit_benchmark(
    snapshot: MarketSnapshot,
    params: KernelParams,
    nugget: float | None = None,
) -> BenchmarkModel:
    """Fit to the snapshot's one-month quotes; everything else is ignored.

    Hyperparameters are reused from the main model's likelihood fit so
    comparisons isolate the structural differences.  The nugget defaults
    to 1e-10 sigma^2, pure interpolation up to numerical stabilization.
    """
    monthly = snapshot.monthly_quotes()
    if len(monthly) < 2:
        raise ConfigError(
            f"benchmark needs at least 2 one-month quotes, snapshot has {len(monthly)}"
        )
    origin, _ = snapshot.month_span()
    order = sorted(range(len(monthly)), key=lambda i: monthly[i].start)
    T = np.array([monthly[i].start.diff(origin) * DT for i in order])
    mids = np.array([monthly[i].mid for i in order])
    if np.any(np.diff(T) <= 0):
        raise ValidationError("duplicate monthly maturities in snapshot")
    if nugget is None:
        nugget = DEFAULT_NUGGET_FACTOR * params.sigma * params.sigma
    K = backend.cross_gram(T, T, params.sigma, params.theta)
    K[np.diag_indices_from(K)] += nugget
    try:
        cf = sla.cho_factor(K, lower=True, check_finite=False)
    except sla.LinAlgError:
        raise NumericalError("benchmark Gram matrix is not positive definite")
    weights = sla.cho_solve(cf, mids, check_finite=False)
    return BenchmarkModel(
        origin=origin,
        maturities=T,
        mids=mids,
        params=params,
        nugget=nugget,
        weights=weights,
    )


def eval_benchmark(model: BenchmarkModel, T: float) -> float:
    """Kriging predictor at year fraction T; defined for all T.

    Far beyond the data (distances much larger than theta) the value
    decays to the zero prior mean.
    """
    k = backend.cross_gram(
        np.array([T]), model.maturities, model.params.sigma, model.params.theta
    )
    return float(k[0] @ model.weights)


def benchmark_window(model: BenchmarkModel, months) -> float:
    """Day-count-weighted average of the predictor over a delivery window.

    Accepts (month, days) pairs or signed triples like
    :func:`termkrig.market.delivery_months`; no grid coverage limit
    applies since the predictor extrapolates.
    """
    totals: dict[int, int] = {}
    entries = []
    for entry in months:
        m, days, sign = entry if len(entry) == 3 else (*entry, 1)
        entries.append((m, int(days), int(sign)))
        totals[sign] = totals.get(sign, 0) + int(days)
    value = 0.0
    for m, days, sign in entries:
        T = m.diff(model.origin) * DT
        value += sign * (days / totals[sign]) * eval_benchmark(model, T)
    return value
