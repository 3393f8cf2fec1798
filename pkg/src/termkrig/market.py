"""Futures quote ingestion: contract kinds, delivery calendars, CSV I/O.

Quotes cover heterogeneous delivery periods (single months, quarters,
six-month seasons, calendar years) plus calendar spreads between two
windows of equal length.  Seasons follow the gas-market convention:
summer runs April through September, winter runs October through March
of the following year.

Spread sign convention: a spread quote is worth the price of the
chronologically *later* window minus the price of the *earlier* one,
regardless of the column order in the input file.
"""

from __future__ import annotations

import calendar
import csv
import datetime as dt
import enum
import io
import re
from dataclasses import dataclass, field

from .errors import QuoteParseError, ValidationError

__all__ = [
    "Month",
    "ContractKind",
    "Quote",
    "MarketSnapshot",
    "delivery_months",
    "parse_snapshot",
    "parse_snapshot_text",
    "snapshot_to_csv",
    "write_snapshot",
]

CSV_HEADER = ("kind", "window", "window2", "bid", "ask", "id")

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_RE = re.compile(r"^(\d{4})-Q([1-4])$")
_SEASON_RE = re.compile(r"^(SUM|WIN)-(\d{2})$")
_YEAR_RE = re.compile(r"^(\d{4})$")


@dataclass(frozen=True, order=True)
class Month:
    """A calendar month (year, month), totally ordered."""

    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValidationError(f"month out of range: {self.year}-{self.month}")

    @property
    def index(self) -> int:
        """Months since year 0, useful for arithmetic."""
        return self.year * 12 + (self.month - 1)

    def days(self) -> int:
        """Number of calendar days in this month."""
        return calendar.monthrange(self.year, self.month)[1]

    def plus(self, n: int) -> "Month":
        i = self.index + n
        return Month(i // 12, i % 12 + 1)

    def diff(self, other: "Month") -> int:
        """Whole months from ``other`` to ``self``."""
        return self.index - other.index

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @classmethod
    def parse(cls, text: str) -> "Month":
        m = _MONTH_RE.match(text)
        if m is None:
            raise QuoteParseError(f"invalid month {text!r}, expected YYYY-MM")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def of(cls, date: dt.date) -> "Month":
        return cls(date.year, date.month)


class ContractKind(enum.Enum):
    """Delivery-period family of a futures quote."""

    MONTH = "M"
    QUARTER = "Q"
    SEASON = "S"
    YEAR = "Y"
    MONTH_SPREAD = "MS"
    QUARTER_SPREAD = "QS"

    @property
    def is_spread(self) -> bool:
        return self in (ContractKind.MONTH_SPREAD, ContractKind.QUARTER_SPREAD)

    @property
    def window_months(self) -> int:
        """Length in months of one delivery window of this kind."""
        return {
            ContractKind.MONTH: 1,
            ContractKind.QUARTER: 3,
            ContractKind.SEASON: 6,
            ContractKind.YEAR: 12,
            ContractKind.MONTH_SPREAD: 1,
            ContractKind.QUARTER_SPREAD: 3,
        }[self]


def _window_length(start: Month, end: Month) -> int:
    return end.diff(start) + 1


def _parse_window(kind: ContractKind, text: str) -> tuple[Month, Month]:
    """Resolve a window code into its first and last delivery month."""
    if kind in (ContractKind.MONTH, ContractKind.MONTH_SPREAD):
        start = Month.parse(text)
        return start, start
    if kind in (ContractKind.QUARTER, ContractKind.QUARTER_SPREAD):
        m = _QUARTER_RE.match(text)
        if m is None:
            raise QuoteParseError(f"invalid quarter {text!r}, expected YYYY-Qn")
        start = Month(int(m.group(1)), 3 * int(m.group(2)) - 2)
        return start, start.plus(2)
    if kind is ContractKind.SEASON:
        m = _SEASON_RE.match(text)
        if m is None:
            raise QuoteParseError(f"invalid season {text!r}, expected SUM-YY or WIN-YY")
        year = 2000 + int(m.group(2))
        if m.group(1) == "SUM":
            start = Month(year, 4)  # April .. September
        else:
            start = Month(year, 10)  # October .. March of next year
        return start, start.plus(5)
    if kind is ContractKind.YEAR:
        m = _YEAR_RE.match(text)
        if m is None:
            raise QuoteParseError(f"invalid year {text!r}, expected YYYY")
        start = Month(int(m.group(1)), 1)
        return start, Month(int(m.group(1)), 12)
    raise QuoteParseError(f"unsupported kind {kind!r}")


def _window_code(kind: ContractKind, start: Month, end: Month) -> str:
    """Inverse of :func:`_parse_window`, used when serializing."""
    if kind in (ContractKind.MONTH, ContractKind.MONTH_SPREAD):
        return str(start)
    if kind in (ContractKind.QUARTER, ContractKind.QUARTER_SPREAD):
        return f"{start.year:04d}-Q{(start.month - 1) // 3 + 1}"
    if kind is ContractKind.SEASON:
        if start.month == 4:
            return f"SUM-{start.year % 100:02d}"
        return f"WIN-{start.year % 100:02d}"
    return f"{start.year:04d}"


@dataclass(frozen=True)
class Quote:
    """One market observation: a bid/ask pair on a delivery window.

    Spread quotes carry a second window (``start2``/``end2``); the quote's
    value is later-window price minus earlier-window price.
    """

    id: str
    kind: ContractKind
    start: Month
    end: Month
    bid: float
    ask: float
    start2: Month | None = None
    end2: Month | None = None

    def __post_init__(self):
        if self.bid > self.ask:
            raise ValidationError(
                f"quote {self.id!r}: bid {self.bid} exceeds ask {self.ask}"
            )
        self._check_window(self.start, self.end)
        if self.kind.is_spread:
            if self.start2 is None or self.end2 is None:
                raise ValidationError(f"quote {self.id!r}: spread needs two windows")
            self._check_window(self.start2, self.end2)
            if _window_length(self.start, self.end) != _window_length(
                self.start2, self.end2
            ):
                raise ValidationError(
                    f"quote {self.id!r}: spread windows differ in length"
                )
            if not (self.end < self.start2 or self.end2 < self.start):
                raise ValidationError(f"quote {self.id!r}: spread windows overlap")
        elif self.start2 is not None or self.end2 is not None:
            raise ValidationError(f"quote {self.id!r}: second window on non-spread")

    _ALIGNED_STARTS = {
        ContractKind.QUARTER: (1, 4, 7, 10),
        ContractKind.QUARTER_SPREAD: (1, 4, 7, 10),
        ContractKind.SEASON: (4, 10),
        ContractKind.YEAR: (1,),
    }

    def _check_window(self, start: Month, end: Month) -> None:
        if end < start:
            raise ValidationError(f"quote {self.id!r}: window ends before it starts")
        if _window_length(start, end) != self.kind.window_months:
            raise ValidationError(
                f"quote {self.id!r}: {self.kind.value} window must span "
                f"{self.kind.window_months} months, got {_window_length(start, end)}"
            )
        # calendar alignment keeps windows expressible in the CSV codes
        allowed = self._ALIGNED_STARTS.get(self.kind)
        if allowed is not None and start.month not in allowed:
            raise ValidationError(
                f"quote {self.id!r}: {self.kind.value} window cannot start in "
                f"month {start.month}"
            )

    @property
    def mid(self) -> float:
        return 0.5 * (self.bid + self.ask)

    def legs(self) -> tuple[tuple[int, Month, Month], ...]:
        """Signed delivery windows: (+1, start, end) per leg.

        Outrights have a single +1 leg.  Spreads have the later window at
        +1 and the earlier at -1.
        """
        if not self.kind.is_spread:
            return ((1, self.start, self.end),)
        first = (self.start, self.end)
        second = (self.start2, self.end2)
        later, earlier = (second, first) if second[0] > first[0] else (first, second)
        return ((1, later[0], later[1]), (-1, earlier[0], earlier[1]))

    def all_months(self) -> list[Month]:
        out = []
        for _, start, end in self.legs():
            out.extend(start.plus(i) for i in range(_window_length(start, end)))
        return out


def delivery_months(quote: Quote) -> list[tuple[Month, int, int]]:
    """Expand a quote into (calendar month, day count, sign) entries.

    Outright quotes get sign +1 on every month; spread quotes list the
    later window at +1 followed by the earlier window at -1.  Day counts
    are actual calendar lengths (leap years included).
    """
    out = []
    for sign, start, end in quote.legs():
        for i in range(_window_length(start, end)):
            m = start.plus(i)
            out.append((m, m.days(), sign))
    return out


@dataclass(frozen=True)
class MarketSnapshot:
    """All quotes observed on one date.

    Every delivery window must start strictly after the observation
    month: windows already in delivery are rejected.
    """

    asof: dt.date
    quotes: tuple[Quote, ...] = field(default_factory=tuple)

    def __post_init__(self):
        seen: set[str] = set()
        asof_month = Month.of(self.asof)
        for q in self.quotes:
            if q.id in seen:
                raise ValidationError(f"duplicate quote id {q.id!r}")
            seen.add(q.id)
            for _, start, _ in q.legs():
                if start <= asof_month:
                    raise ValidationError(
                        f"quote {q.id!r}: delivery starts {start}, not after "
                        f"observation month {asof_month}"
                    )

    def month_span(self) -> tuple[Month, Month]:
        """First and last delivery month across all quotes."""
        months = [m for q in self.quotes for m in q.all_months()]
        if not months:
            raise ValidationError("snapshot has no quotes")
        return min(months), max(months)

    def monthly_quotes(self) -> list[Quote]:
        return [q for q in self.quotes if q.kind is ContractKind.MONTH]


def _default_id(kind: ContractKind, w1: str, w2: str) -> str:
    return f"{kind.value}:{w1}:{w2}" if w2 else f"{kind.value}:{w1}"


def _parse_row(row: dict[str, str], lineno: int) -> Quote:
    if row.get(None):
        raise QuoteParseError(f"line {lineno}: too many fields")
    kind_code = (row.get("kind") or "").strip()
    try:
        kind = ContractKind(kind_code)
    except ValueError:
        raise ValidationError(f"line {lineno}: unknown contract code {kind_code!r}")
    w1 = (row.get("window") or "").strip()
    w2 = (row.get("window2") or "").strip()
    try:
        start, end = _parse_window(kind, w1)
        start2 = end2 = None
        if kind.is_spread:
            if not w2:
                raise QuoteParseError("spread row missing window2")
            start2, end2 = _parse_window(kind, w2)
        elif w2:
            raise QuoteParseError("window2 given for non-spread row")
        bid = float(row["bid"])
        ask = float(row["ask"])
    except (KeyError, TypeError):
        raise QuoteParseError(f"line {lineno}: missing field")
    except ValueError as exc:
        raise QuoteParseError(f"line {lineno}: {exc}")
    except QuoteParseError as exc:
        raise QuoteParseError(f"line {lineno}: {exc}")
    qid = (row.get("id") or "").strip() or _default_id(kind, w1, w2)
    try:
        return Quote(qid, kind, start, end, bid, ask, start2, end2)
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}")


def parse_snapshot_text(text: str, asof: dt.date) -> MarketSnapshot:
    """Parse CSV content (see :data:`CSV_HEADER`) into a snapshot."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise QuoteParseError("empty input")
    fields = [f.strip() for f in reader.fieldnames]
    if fields != list(CSV_HEADER):
        raise QuoteParseError(
            f"bad header {fields!r}, expected {','.join(CSV_HEADER)}"
        )
    quotes = [_parse_row(row, lineno) for lineno, row in enumerate(reader, start=2)]
    return MarketSnapshot(asof, tuple(quotes))


def parse_snapshot(path: str, asof: dt.date) -> MarketSnapshot:
    """Read a quote file.  Raises :class:`QuoteParseError` naming the path."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise QuoteParseError(f"cannot read input file {path!r}: {exc}")
    return parse_snapshot_text(text, asof)


def snapshot_to_csv(snapshot: MarketSnapshot) -> str:
    """Serialize to the same CSV layout accepted by :func:`parse_snapshot`."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for q in snapshot.quotes:
        w1 = _window_code(q.kind, q.start, q.end)
        w2 = ""
        if q.kind.is_spread:
            w2 = _window_code(q.kind, q.start2, q.end2)
        writer.writerow([q.kind.value, w1, w2, repr(q.bid), repr(q.ask), q.id])
    return out.getvalue()


def write_snapshot(snapshot: MarketSnapshot, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(snapshot_to_csv(snapshot))
