"""Synthetic quote snapshots priced off a known seasonal curve.

The generators keep mid prices exactly consistent with the underlying
curve (windows priced by the same day-count averaging the model uses),
so the resulting quote systems are arbitrage-free by construction and
the true node values are a feasible curve.

Run ``python -m termkrig.synthetic out.csv`` to write a demo file.
"""

from __future__ import annotations

import datetime as dt
import math
import sys
from dataclasses import dataclass

from .curve import DT
from .market import ContractKind, MarketSnapshot, Month, Quote, write_snapshot

__all__ = [
    "TrueCurve",
    "standard_snapshot",
    "band_snapshot",
    "seasonal_yearly_snapshot",
    "crossed_snapshot",
    "STANDARD_ASOF",
]

STANDARD_ASOF = dt.date(2021, 3, 15)
STANDARD_ORIGIN = Month(2021, 4)


@dataclass(frozen=True)
class TrueCurve:
    """level + trend * t + amplitude * cos(2 pi (calendar month - 1)/12).

    The seasonal part peaks in January and is exactly 12-month periodic
    in calendar months.
    """

    origin: Month
    level: float = 10.0
    trend: float = 0.5
    amplitude: float = 1.5

    def at(self, month: Month) -> float:
        t = month.diff(self.origin) * DT
        season = self.amplitude * math.cos(2.0 * math.pi * (month.month - 1) / 12.0)
        return self.level + self.trend * t + season

    def window_mid(self, start: Month, end: Month) -> float:
        months = [start.plus(i) for i in range(end.diff(start) + 1)]
        days = [m.days() for m in months]
        total = sum(days)
        return sum(d * self.at(m) for m, d in zip(months, days)) / total


def _outright(curve, kind, start, end, rel_width, qid):
    mid = curve.window_mid(start, end)
    w = rel_width * abs(mid)
    return Quote(qid, kind, start, end, mid - 0.5 * w, mid + 0.5 * w)


def _spread(curve, kind, s1, e1, s2, e2, rel_width, qid):
    later, earlier = ((s2, e2), (s1, e1)) if s2 > s1 else ((s1, e1), (s2, e2))
    mid = curve.window_mid(*later) - curve.window_mid(*earlier)
    w = rel_width * abs(curve.window_mid(*later))
    return Quote(qid, kind, s1, e1, mid - 0.5 * w, mid + 0.5 * w, s2, e2)


def standard_snapshot(rel_width: float = 0.002) -> tuple[MarketSnapshot, TrueCurve]:
    """56 quotes over a 60-month grid: 36 months, 8 quarters, 4 seasons,
    2 years, 6 spreads; widths default to 0.2% of level."""
    o = STANDARD_ORIGIN
    curve = TrueCurve(origin=o)
    quotes = []
    for i in range(36):
        m = o.plus(i)
        quotes.append(_outright(curve, ContractKind.MONTH, m, m, rel_width, f"M{i + 1:02d}"))
    for i in range(8):  # Q2-2024 .. Q1-2026
        qs = o.plus(36 + 3 * i)
        quotes.append(
            _outright(curve, ContractKind.QUARTER, qs, qs.plus(2), rel_width, f"Q{i + 1}")
        )
    for i in range(4):  # SUM-24, WIN-24, SUM-25, WIN-25
        ss = o.plus(36 + 6 * i)
        quotes.append(
            _outright(curve, ContractKind.SEASON, ss, ss.plus(5), rel_width, f"S{i + 1}")
        )
    for year in (2024, 2025):
        quotes.append(
            _outright(
                curve, ContractKind.YEAR, Month(year, 1), Month(year, 12), rel_width, f"Y{year}"
            )
        )
    for i in range(3):  # month spreads within year one
        a = o.plus(2 * i + 1)
        b = o.plus(2 * i + 2)
        quotes.append(
            _spread(curve, ContractKind.MONTH_SPREAD, a, a, b, b, rel_width, f"MS{i + 1}")
        )
    for i in range(3):  # quarter spreads across the quarterly strip
        a = o.plus(36 + 3 * i)
        b = o.plus(39 + 3 * i)
        quotes.append(
            _spread(
                curve, ContractKind.QUARTER_SPREAD, a, a.plus(2), b, b.plus(2),
                rel_width, f"QS{i + 1}",
            )
        )
    return MarketSnapshot(STANDARD_ASOF, tuple(quotes)), curve


def band_snapshot(
    rel_width: float = 0.05, pinned_offsets: tuple[int, ...] = (3, 7)
) -> tuple[MarketSnapshot, TrueCurve]:
    """Band-test snapshot: 60 nodes, wide spreads, two pinned months,
    and a long unquoted stretch (months 13..48)."""
    o = STANDARD_ORIGIN
    curve = TrueCurve(origin=o, level=10.0, trend=0.6, amplitude=0.0)
    quotes = []
    for i in range(12):
        m = o.plus(i)
        width = 0.0 if i in pinned_offsets else rel_width
        quotes.append(_outright(curve, ContractKind.MONTH, m, m, width, f"M{i + 1:02d}"))
    for i in range(48, 60):
        m = o.plus(i)
        quotes.append(_outright(curve, ContractKind.MONTH, m, m, rel_width, f"M{i + 1:02d}"))
    return MarketSnapshot(STANDARD_ASOF, tuple(quotes)), curve


def seasonal_yearly_snapshot(rel_width: float = 0.002) -> tuple[MarketSnapshot, TrueCurve]:
    """36 nodes: seasonal monthly quotes over year one, then only two
    calendar-year quotes; the penalty has to carry the pattern forward."""
    o = Month(2021, 1)
    curve = TrueCurve(origin=o, level=10.0, trend=0.3, amplitude=1.5)
    quotes = []
    for i in range(12):
        m = o.plus(i)
        quotes.append(_outright(curve, ContractKind.MONTH, m, m, rel_width, f"M{i + 1:02d}"))
    for year in (2022, 2023):
        # yearly quotes carry the level only; generous widths leave the
        # shape inside the year unconstrained
        quotes.append(
            _outright(
                curve, ContractKind.YEAR, Month(year, 1), Month(year, 12), 0.05, f"Y{year}"
            )
        )
    return MarketSnapshot(dt.date(2020, 12, 15), tuple(quotes)), curve


def crossed_snapshot() -> MarketSnapshot:
    """Deliberately infeasible: the quarter's ask sits below the
    day-count average of the monthly bids."""
    o = Month(2022, 1)
    quotes = []
    for i in range(3):
        m = o.plus(i)
        quotes.append(Quote(f"M{i + 1:02d}", ContractKind.MONTH, m, m, 10.0, 10.1))
    quotes.append(Quote("Q1", ContractKind.QUARTER, o, o.plus(2), 8.8, 9.0))
    return MarketSnapshot(dt.date(2021, 12, 15), tuple(quotes))


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: python -m termkrig.synthetic OUT.csv", file=sys.stderr)
        return 5
    snapshot, _ = standard_snapshot()
    write_snapshot(snapshot, args[0])
    print(f"wrote {len(snapshot.quotes)} quotes to {args[0]} (asof {snapshot.asof})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
