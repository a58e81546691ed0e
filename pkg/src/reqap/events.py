"""Event data model: key-value events with time spans, and the immutable store.

All data sources are represented uniformly as lists of events. An event's
native attributes always include ``source``; the span-derived keys
(``start_date``, ``start_time``, ``end_date``, ``end_time``,
``start_datetime``, ``end_datetime``) are virtual and resolved on access so
they never pollute verbalization or pattern mining.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Iterator, Mapping, Optional

from .values import TimeSpan, Value, check_value, text_to_scalar, value_to_text


class Source(str, enum.Enum):
    CALENDAR = "calendar"
    MAIL = "mail"
    SOCIAL_MEDIA = "social_media"
    NOTE = "note"
    WORKOUT = "workout"
    MUSIC_STREAM = "music_stream"
    MOVIE_STREAM = "movie_stream"
    TVSERIES_STREAM = "tvseries_stream"
    ONLINE_PURCHASE = "online_purchase"


# Keys resolvable on every event regardless of its native attributes.
SPAN_KEYS = (
    "start_date",
    "start_time",
    "end_date",
    "end_time",
    "start_datetime",
    "end_datetime",
)
BUILTIN_KEYS = ("source",) + SPAN_KEYS

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*$")


def normalize_key(key: str) -> str:
    """Lowercase and snake_case an attribute key; reject anything invalid."""
    norm = key.strip().lower().replace(" ", "_").replace("-", "_")
    if not _KEY_RE.match(norm):
        raise ValueError(f"invalid attribute key: {key!r}")
    return norm


@dataclass(frozen=True)
class Event:
    """One unit of personal data: an id, a source, a time span and attributes.

    ``provenance`` tracks the ids of the original store events this event
    descends from (itself, for store events; unions, for merged or joined
    events).
    """

    id: str
    source: Source
    span: TimeSpan
    attrs: Mapping[str, Value]
    provenance: frozenset = field(default_factory=frozenset)

    def get(self, key: str) -> Optional[Value]:
        """Attribute lookup with fallback to the virtual span-derived keys."""
        if key in self.attrs:
            return self.attrs[key]
        if key == "start_date":
            return self.span.start.date()
        if key == "start_time":
            return self.span.start.time()
        if key == "end_date":
            return self.span.end.date()
        if key == "end_time":
            return self.span.end.time()
        if key == "start_datetime":
            return self.span.start
        if key == "end_datetime":
            return self.span.end
        return None

    def has(self, key: str) -> bool:
        return key in self.attrs or key in SPAN_KEYS

    def with_attrs(self, extra: Mapping[str, Value], id: Optional[str] = None) -> "Event":
        merged = dict(self.attrs)
        merged.update(extra)
        return Event(
            id=id if id is not None else self.id,
            source=self.source,
            span=self.span,
            attrs=merged,
            provenance=self.provenance,
        )


def make_event(
    id: str,
    source: Source | str,
    span: TimeSpan,
    attrs: Mapping[str, Value],
    provenance: Optional[frozenset] = None,
) -> Event:
    """Build an event, normalizing keys and enforcing value invariants."""
    src = Source(source)
    normalized: dict[str, Value] = {}
    for key, value in attrs.items():
        norm = normalize_key(key)
        check_value(value)
        normalized[norm] = value
    normalized["source"] = src.value
    return Event(
        id=id,
        source=src,
        span=span,
        attrs=normalized,
        provenance=provenance if provenance is not None else frozenset([id]),
    )


def verbalize_event(event: Event) -> str:
    """Deterministic scoring text: ``key: value | key: value`` with sorted keys."""
    parts = []
    for key in sorted(event.attrs):
        parts.append(f"{key}: {value_to_text(event.attrs[key])}")
    return " | ".join(parts)


class EmptyStoreError(Exception):
    """Finalizing a store with zero events."""


class EventStore:
    """Immutable, time-ordered collection of events with a per-source index."""

    def __init__(self, events: Iterable[Event]):
        ordered = sorted(events, key=lambda e: (e.span.start, e.id))
        seen: set[str] = set()
        for event in ordered:
            if event.id in seen:
                raise ValueError(f"duplicate event id: {event.id}")
            seen.add(event.id)
        if not ordered:
            raise EmptyStoreError("store has no events")
        self._events: tuple[Event, ...] = tuple(ordered)
        self._by_id = {e.id: e for e in ordered}
        by_source: dict[Source, list[str]] = {}
        for event in ordered:
            by_source.setdefault(event.source, []).append(event.id)
        self._by_source = {src: tuple(ids) for src, ids in by_source.items()}

    def __len__(self) -> int:
        return len(self._events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self._events)

    @property
    def events(self) -> tuple[Event, ...]:
        return self._events

    def get(self, event_id: str) -> Optional[Event]:
        return self._by_id.get(event_id)

    def __contains__(self, event_id: str) -> bool:
        return event_id in self._by_id


def events_by_source(store: EventStore, source: Source | str) -> list[Event]:
    """All events of one source in time order; empty when the source is absent."""
    src = Source(source)
    ids = store._by_source.get(src, ())
    return [store.get(i) for i in ids]


# ---------------------------------------------------------------------------
# Canonical store dump (golden-test format): one JSON object per line.
# ---------------------------------------------------------------------------


def _attrs_to_json(attrs: Mapping[str, Value]) -> dict:
    out = {}
    for key in sorted(attrs):
        value = attrs[key]
        if isinstance(value, list):
            out[key] = [m if isinstance(m, (bool, int, float)) else value_to_text(m) for m in value]
        elif isinstance(value, (bool, int, float)):
            out[key] = value
        else:
            out[key] = value_to_text(value)
    return out


def _attrs_from_json(raw: Mapping[str, object]) -> dict[str, Value]:
    attrs: dict[str, Value] = {}
    for key, value in raw.items():
        if isinstance(value, str):
            attrs[key] = text_to_scalar(value)
        elif isinstance(value, list):
            attrs[key] = [text_to_scalar(m) if isinstance(m, str) else m for m in value]
        else:
            attrs[key] = value  # type: ignore[assignment]
    return attrs


def dump_store(store: EventStore) -> str:
    """Serialize a store to canonical JSON lines (byte-stable for fixed content)."""
    lines = []
    for event in store:
        record = {
            "id": event.id,
            "source": event.source.value,
            "start": event.span.start.isoformat(sep="T"),
            "end": event.span.end.isoformat(sep="T"),
            "attrs": _attrs_to_json(event.attrs),
        }
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n"


def load_store(text: str) -> EventStore:
    events = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        record = json.loads(line)
        span = TimeSpan(
            datetime.fromisoformat(record["start"]),
            datetime.fromisoformat(record["end"]),
        )
        events.append(
            make_event(record["id"], record["source"], span, _attrs_from_json(record["attrs"]))
        )
    return EventStore(events)
