from datetime import date, datetime, time, timedelta

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reqap.values import TimeSpan, check_value, text_to_scalar, value_to_text


def test_iso_round_trips():
    for value in (
        date(2022, 3, 14),
        time(9, 30, 0),
        datetime(2019, 1, 3, 18, 45, 12),
        timedelta(seconds=126),
    ):
        assert text_to_scalar(value_to_text(value)) == value


def test_plain_strings_stay_strings():
    for text in ("hello", "2022-13-45", "not a date", "99:99"):
        assert text_to_scalar(text) == text


def test_list_values_join_with_commas():
    assert value_to_text(["A", "B"]) == "A, B"
    assert value_to_text([1, 2.5]) == "1, 2.5"


def test_nested_lists_rejected():
    with pytest.raises(ValueError):
        check_value([["nested"]])


def test_timezone_aware_rejected():
    from datetime import timezone

    with pytest.raises(ValueError):
        check_value(datetime(2020, 1, 1, tzinfo=timezone.utc))


def test_span_orders_endpoints():
    with pytest.raises(ValueError):
        TimeSpan(datetime(2020, 1, 2), datetime(2020, 1, 1))
    point = TimeSpan.point(datetime(2020, 1, 1, 12))
    assert point.start == point.end


def test_span_overlap_shares_instant():
    a = TimeSpan(datetime(2020, 1, 1, 10), datetime(2020, 1, 1, 11))
    b = TimeSpan(datetime(2020, 1, 1, 11), datetime(2020, 1, 1, 12))
    c = TimeSpan(datetime(2020, 1, 1, 12, 0, 1), datetime(2020, 1, 1, 13))
    assert a.overlaps(b) and b.overlaps(a)
    assert not a.overlaps(c)
    assert b.hull(c).start == b.start and b.hull(c).end == c.end


@given(
    st.dates(min_value=date(1970, 1, 1), max_value=date(2100, 1, 1)),
    st.times(),
)
def test_datetime_round_trip_property(d, t):
    value = datetime.combine(d, t)
    assert text_to_scalar(value_to_text(value)) == value
