"""Curve representation: monthly grid, hat basis, radial kernel, covariances.

The term structure is a linear B-spline over an evenly spaced monthly
grid; coefficient k is the one-month futures price at node k.  Node
times are idealized (exactly 1/12 year apart) while day-count accuracy
enters only through the averaging weights of multi-month windows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import CoverageError, NumericalError, ValidationError
from .market import MarketSnapshot, Month, Quote

__all__ = [
    "DT",
    "TimeGrid",
    "KernelParams",
    "CurveModel",
    "basis_phi",
    "kernel",
    "prior_cov",
    "obs_cov",
    "eval_curve",
    "price_window",
    "window_weights",
]

DT = 1.0 / 12.0

JITTER_START = 1e-10
JITTER_MAX = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    """Evenly spaced monthly nodes; node k sits at (k-1)/12 years.

    ``origin`` is the calendar month of the first node; the grid runs
    through ``n`` consecutive months with no extrapolation nodes beyond
    the quoted horizon.
    """

    origin: Month
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("grid needs at least one node")

    @property
    def dt(self) -> float:
        return DT

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n, dtype=np.float64) * DT

    @property
    def node_months(self) -> list[Month]:
        return [self.origin.plus(i) for i in range(self.n)]

    def index_of(self, month: Month) -> int:
        i = month.diff(self.origin)
        if not 0 <= i < self.n:
            raise CoverageError(f"month {month} is off the grid ({self.origin}..{self.origin.plus(self.n - 1)})")
        return i

    def time_of(self, month: Month) -> float:
        return self.index_of(month) * DT

    @classmethod
    def for_snapshot(cls, snapshot: MarketSnapshot) -> "TimeGrid":
        """Grid from the first through the last quoted delivery month."""
        first, last = snapshot.month_span()
        return cls(first, last.diff(first) + 1)


@dataclass(frozen=True)
class KernelParams:
    """Prior scale (price units) and correlation length (years)."""

    sigma: float
    theta: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        if not self.theta > 0:
            raise ValidationError(f"theta must be positive, got {self.theta}")


def basis_phi(x, step: float = DT):
    """Hat function (1 - |x|/step)^+ with compact support (-step, step)."""
    return np.maximum(0.0, 1.0 - np.abs(x) / step)


def kernel(x, theta: float):
    """Gaussian radial correlation exp(-x^2 / (2 theta^2))."""
    x = np.asarray(x, dtype=np.float64)
    return np.exp(-(x * x) / (2.0 * theta * theta))


def prior_cov(grid: TimeGrid, params: KernelParams) -> np.ndarray:
    """Node covariance sigma^2 K(|t_i - t_j|) with escalating diagonal jitter.

    Gaussian kernels at monthly spacing are near-singular for long
    correlation lengths; jitter starts at 1e-10 sigma^2 and grows by
    factors of 10 until a Cholesky factorization succeeds, capped at
    1e-6 sigma^2.
    """
    base = backend.gram(grid.times, params.sigma, params.theta)
    s2 = params.sigma * params.sigma
    jitter = JITTER_START
    while True:
        G = base + (jitter * s2) * np.eye(grid.n)
        try:
            np.linalg.cholesky(G)
            return G
        except np.linalg.LinAlgError:
            if jitter >= JITTER_MAX:
                raise NumericalError(
                    f"prior covariance not positive definite at jitter {jitter:g}"
                )
            jitter *= 10.0


def obs_cov(quotes: list[Quote]) -> np.ndarray:
    """Diagonal observation covariance from bid-ask half-widths.

    Entry j is max(((ask-bid)/2)^2, floor); the floor keeps pinned
    quotes (bid == ask) invertible and is 1e-8 times the squared median
    mid price.
    """
    if not quotes:
        return np.zeros((0, 0))
    mids = np.array([q.mid for q in quotes])
    floor = 1e-8 * float(np.median(mids)) ** 2
    half = np.array([0.5 * (q.ask - q.bid) for q in quotes])
    return np.diag(np.maximum(half * half, floor))


def _normalize_months(months) -> list[tuple[Month, int, int]]:
    out = []
    for entry in months:
        if len(entry) == 2:
            m, days = entry
            out.append((m, int(days), 1))
        else:
            m, days, sign = entry
            out.append((m, int(days), int(sign)))
    return out


def window_weights(grid: TimeGrid, months) -> tuple[np.ndarray, np.ndarray]:
    """Node indices and day-count weights for a delivery window.

    ``months`` holds (month, day count) pairs or signed triples as
    produced by :func:`termkrig.market.delivery_months`.  Each signed
    leg is normalized by its own total day count, so outright windows
    get weights summing to 1 and spreads to 0.
    """
    entries = _normalize_months(months)
    totals: dict[int, int] = {}
    for _, days, sign in entries:
        totals[sign] = totals.get(sign, 0) + days
    idx = np.empty(len(entries), dtype=np.intp)
    w = np.empty(len(entries))
    for j, (m, days, sign) in enumerate(entries):
        idx[j] = grid.index_of(m)
        w[j] = sign * days / totals[sign]
    return idx, w


@dataclass(frozen=True)
class CurveModel:
    """Fitted curve: grid, kernel hyperparameters, and node coefficients."""

    grid: TimeGrid
    params: KernelParams
    xi: np.ndarray
    gamma: float = 0.0
    seasonality_enabled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "xi", np.asarray(self.xi, dtype=np.float64))
        if self.xi.shape != (self.grid.n,):
            raise ValidationError(
                f"coefficient vector has length {self.xi.shape}, grid has {self.grid.n} nodes"
            )


def eval_curve(model: CurveModel, T: float) -> float:
    """One-month price at year fraction T by hat-basis interpolation.

    Exact at nodes, piecewise linear between them.  T may sit up to one
    grid step outside the node range (where the edge hat decays); beyond
    that the curve is undefined and a :class:`CoverageError` is raised.
    """
    t = model.grid.times
    if T < t[0] - DT or T > t[-1] + DT:
        raise CoverageError(f"maturity {T:g}y outside curve support")
    return float(basis_phi(T - t) @ model.xi)


def price_window(model: CurveModel, months) -> float:
    """Day-count-weighted average price over a delivery window.

    Accepts the same entries as :func:`window_weights`; spread windows
    (signed legs) price as later-leg average minus earlier-leg average.
    """
    idx, w = window_weights(model.grid, months)
    return float(w @ model.xi[idx])
