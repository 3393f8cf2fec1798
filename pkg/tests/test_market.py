import calendar
import datetime as dt

import pytest
from hypothesis import given
from hypothesis import strategies as st

from termkrig.errors import QuoteParseError, ValidationError
from termkrig.market import (
    ContractKind,
    MarketSnapshot,
    Month,
    Quote,
    delivery_months,
    parse_snapshot,
    parse_snapshot_text,
    snapshot_to_csv,
)

ASOF = dt.date(2020, 1, 14)

HEADER = "kind,window,window2,bid,ask,id\n"


def parse_rows(rows, asof=ASOF):
    return parse_snapshot_text(HEADER + "\n".join(rows) + "\n", asof)


def test_parse_month_row():
    snap = parse_rows(["M,2020-02,,9.572,9.592,FEB20"])
    (q,) = snap.quotes
    assert q.kind is ContractKind.MONTH
    assert q.start == Month(2020, 2) == q.end
    assert q.bid == 9.572 and q.ask == 9.592
    assert q.id == "FEB20"


def test_parse_winter_season_spans_year_end():
    snap = parse_rows(["S,WIN-21,,10.0,10.2,"], asof=dt.date(2021, 1, 14))
    (q,) = snap.quotes
    assert q.start == Month(2021, 10)
    assert q.end == Month(2022, 3)


def test_parse_summer_season():
    snap = parse_rows(["S,SUM-21,,10.0,10.2,"], asof=dt.date(2021, 1, 14))
    (q,) = snap.quotes
    assert q.start == Month(2021, 4)
    assert q.end == Month(2021, 9)


def test_crossed_bid_ask_rejected():
    with pytest.raises(ValidationError, match="line 2"):
        parse_rows(["M,2020-03,,10.0,9.0,"])


def test_unknown_contract_code():
    with pytest.raises(ValidationError, match="unknown contract code"):
        parse_rows(["X,2020-03,,9.0,10.0,"])


def test_malformed_row_reports_line_number():
    with pytest.raises(QuoteParseError, match="line 3"):
        parse_rows(["M,2020-03,,9.0,10.0,a", "M,2020-04,,nope,10.0,b"])


def test_too_many_fields_rejected():
    with pytest.raises(QuoteParseError, match="line 2"):
        parse_rows(["M,2020-03,,9.0,10.0,a,extra"])


def test_missing_file_names_path(tmp_path):
    path = str(tmp_path / "nope.csv")
    with pytest.raises(QuoteParseError, match="nope.csv"):
        parse_snapshot(path, ASOF)


def test_bad_header_rejected():
    with pytest.raises(QuoteParseError, match="header"):
        parse_snapshot_text("a,b,c\n", ASOF)


def test_quarter_delivery_months_use_calendar_day_counts():
    q = Quote("q", ContractKind.QUARTER, Month(2021, 1), Month(2021, 3), 9.0, 10.0)
    expected = [
        (Month(2021, m), calendar.monthrange(2021, m)[1]) for m in (1, 2, 3)
    ]
    assert [(m, d) for m, d, _ in delivery_months(q)] == expected
    assert expected[0][1] == 31 and expected[1][1] == 28 and expected[2][1] == 31


def test_leap_february():
    q = Quote("q", ContractKind.MONTH, Month(2020, 2), Month(2020, 2), 9.0, 10.0)
    assert [(m, d) for m, d, _ in delivery_months(q)] == [(Month(2020, 2), 29)]


def test_year_day_counts_sum_to_calendar_year():
    q = Quote("q", ContractKind.YEAR, Month(2022, 1), Month(2022, 12), 9.0, 10.0)
    months = delivery_months(q)
    assert len(months) == 12
    assert sum(d for _, d, _ in months) == 365


def test_spread_signs_follow_chronology():
    # later window gets +1 regardless of column order
    q = Quote(
        "s", ContractKind.MONTH_SPREAD,
        Month(2020, 2), Month(2020, 2), -0.1, 0.1,
        Month(2020, 3), Month(2020, 3),
    )
    entries = delivery_months(q)
    assert entries == [(Month(2020, 3), 31, 1), (Month(2020, 2), 29, -1)]

    q2 = Quote(
        "s2", ContractKind.MONTH_SPREAD,
        Month(2020, 3), Month(2020, 3), -0.1, 0.1,
        Month(2020, 2), Month(2020, 2),
    )
    assert delivery_months(q2) == entries


def test_spread_windows_must_not_overlap():
    with pytest.raises(ValidationError, match="overlap"):
        Quote(
            "s", ContractKind.QUARTER_SPREAD,
            Month(2021, 1), Month(2021, 3), -1.0, 1.0,
            Month(2021, 1), Month(2021, 3),
        )


def test_window_length_must_match_kind():
    with pytest.raises(ValidationError, match="span"):
        Quote("q", ContractKind.QUARTER, Month(2021, 1), Month(2021, 4), 9.0, 10.0)


def test_quarter_must_be_calendar_aligned():
    with pytest.raises(ValidationError, match="cannot start"):
        Quote("q", ContractKind.QUARTER, Month(2021, 2), Month(2021, 4), 9.0, 10.0)


def test_front_month_rejected():
    with pytest.raises(ValidationError, match="not after"):
        parse_rows(["M,2020-01,,9.0,10.0,"], asof=dt.date(2020, 1, 14))


def test_duplicate_ids_rejected():
    with pytest.raises(ValidationError, match="duplicate"):
        parse_rows(["M,2020-03,,9.0,10.0,dup", "M,2020-04,,9.0,10.0,dup"])


def test_default_ids_generated():
    snap = parse_rows(["M,2020-03,,9.0,10.0,", "MS,2020-04,2020-05,-0.2,0.0,"])
    assert snap.quotes[0].id == "M:2020-03"
    assert snap.quotes[1].id == "MS:2020-04:2020-05"


def test_round_trip_exact():
    rows = [
        "M,2020-02,,9.572,9.592,m1",
        "Q,2020-Q2,,9.1,9.3,q1",
        "S,WIN-20,,10.5,10.9,s1",
        "Y,2021,,10.0,10.4,y1",
        "MS,2020-03,2020-02,-0.25,-0.15,ms1",
        "QS,2020-Q3,2020-Q2,-0.5,0.5,qs1",
    ]
    snap = parse_rows(rows)
    assert parse_snapshot_text(snapshot_to_csv(snap), ASOF) == snap


months_st = st.builds(
    Month, st.integers(min_value=2020, max_value=2040), st.integers(min_value=1, max_value=12)
)


@given(months_st, st.integers(min_value=-600, max_value=600))
def test_month_arithmetic_round_trips(m, n):
    assert m.plus(n).diff(m) == n
    assert Month.parse(str(m)) == m


@given(
    st.sampled_from(
        [
            (ContractKind.MONTH, tuple(range(1, 13))),
            (ContractKind.QUARTER, (1, 4, 7, 10)),
            (ContractKind.SEASON, (4, 10)),
            (ContractKind.YEAR, (1,)),
        ]
    ),
    st.integers(min_value=2020, max_value=2040),
    st.data(),
)
def test_day_counts_sum_to_window_length(kind_starts, year, data):
    kind, starts = kind_starts
    start = Month(year, data.draw(st.sampled_from(starts)))
    end = start.plus(kind.window_months - 1)
    q = Quote("w", kind, start, end, 1.0, 2.0)
    months = delivery_months(q)
    first = dt.date(start.year, start.month, 1)
    after = end.plus(1)
    last = dt.date(after.year, after.month, 1)
    assert sum(d for _, d, _ in months) == (last - first).days


@given(st.integers(min_value=2000, max_value=2099))
def test_season_convention_any_year(year):
    q = Quote("s", ContractKind.SEASON, Month(year, 4), Month(year, 9), 1.0, 2.0)
    assert [m.month for m, _, _ in delivery_months(q)] == [4, 5, 6, 7, 8, 9]
    w = Quote("w", ContractKind.SEASON, Month(year, 10), Month(year + 1, 3), 1.0, 2.0)
    assert [(m.year - year, m.month) for m, _, _ in delivery_months(w)] == [
        (0, 10), (0, 11), (0, 12), (1, 1), (1, 2), (1, 3)
    ]


def test_snapshot_rejects_empty_month_span():
    snap = MarketSnapshot(ASOF, ())
    with pytest.raises(ValidationError, match="no quotes"):
        snap.month_span()
