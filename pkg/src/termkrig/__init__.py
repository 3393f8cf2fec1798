"""Arbitrage-consistent commodity futures term structures.

Builds one-month futures curves from heterogeneous bid/ask quotes
(months, quarters, seasons, years, calendar spreads) by constrained
Gaussian-process regression, with an optional seasonality-preserving
penalty, posterior uncertainty bands, and a classical-kriging baseline.
"""

from .curve import CurveModel, KernelParams, TimeGrid, eval_curve, price_window
from .market import (
    ContractKind,
    MarketSnapshot,
    Month,
    Quote,
    delivery_months,
    parse_snapshot,
)

__version__ = "0.1.0"

__all__ = [
    "ContractKind",
    "CurveModel",
    "KernelParams",
    "MarketSnapshot",
    "Month",
    "Quote",
    "TimeGrid",
    "delivery_months",
    "eval_curve",
    "parse_snapshot",
    "price_window",
    "__version__",
]
