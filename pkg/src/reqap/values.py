"""Typed attribute values: scalars, lists of scalars, and time spans.

Every value carried by an event attribute is one of a closed set of scalar
types (text, int, float, date, time, datetime, duration) or a flat list of
scalars. Dates and times are timezone-naive throughout; durations are whole
seconds held in a ``timedelta``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from typing import Union

Scalar = Union[str, int, float, date, time, datetime, timedelta]
Value = Union[Scalar, list]

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_TIME_RE = re.compile(r"^\d{2}:\d{2}(:\d{2})?$")
_DATETIME_RE = re.compile(r"^\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?$")
_DURATION_RE = re.compile(r"^PT(\d+)S$")


def check_value(value: object) -> None:
    """Raise ValueError unless ``value`` is a valid attribute value.

    Lists may contain only scalars (no nesting).
    """
    if isinstance(value, list):
        for member in value:
            if isinstance(member, list):
                raise ValueError("nested lists are not valid attribute values")
            check_value(member)
        return
    if not isinstance(value, (str, bool, int, float, date, time, datetime, timedelta)):
        raise ValueError(f"unsupported attribute value type: {type(value).__name__}")
    if isinstance(value, (datetime, time)) and value.tzinfo is not None:
        raise ValueError("attribute datetimes/times must be timezone-naive")


def value_to_text(value: Value) -> str:
    """Canonical textual form: ISO-8601 for temporal types, comma-join for lists."""
    if isinstance(value, list):
        return ", ".join(value_to_text(member) for member in value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, datetime):
        return value.isoformat(sep="T")
    if isinstance(value, (date, time)):
        return value.isoformat()
    if isinstance(value, timedelta):
        return f"PT{int(value.total_seconds())}S"
    return str(value)


def text_to_scalar(text: str) -> Scalar:
    """Parse a string back into a typed scalar where it matches a canonical form.

    Strings that are not strict ISO dates/times/datetimes or durations stay
    strings, so round-tripping through ``value_to_text`` is lossless.
    """
    if _DATE_RE.match(text):
        try:
            return date.fromisoformat(text)
        except ValueError:
            return text
    if _DATETIME_RE.match(text):
        try:
            return datetime.fromisoformat(text)
        except ValueError:
            return text
    if _TIME_RE.match(text):
        try:
            return time.fromisoformat(text)
        except ValueError:
            return text
    m = _DURATION_RE.match(text)
    if m:
        return timedelta(seconds=int(m.group(1)))
    return text


@dataclass(frozen=True)
class TimeSpan:
    """Closed time interval; a point event has start == end."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start.tzinfo is not None or self.end.tzinfo is not None:
            raise ValueError("time spans are timezone-naive")
        if self.start > self.end:
            raise ValueError(f"span start {self.start} after end {self.end}")

    @classmethod
    def point(cls, instant: datetime) -> "TimeSpan":
        return cls(instant, instant)

    def overlaps(self, other: "TimeSpan") -> bool:
        """True when the two spans share at least one instant."""
        return self.start <= other.end and other.start <= self.end

    def hull(self, other: "TimeSpan") -> "TimeSpan":
        return TimeSpan(min(self.start, other.start), max(self.end, other.end))

    @property
    def duration(self) -> timedelta:
        return self.end - self.start
