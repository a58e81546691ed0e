"""Ingestion of export files into an event store.

Supported formats:

* ``event-lines``: one self-describing JSON object per line with required
  ``source`` and ``start`` fields, optional ``end``, and arbitrary further
  key-value pairs. A missing ``end`` makes the record a point event.
* ``calendar-file``: an .ics subset covering VEVENT blocks with SUMMARY,
  DESCRIPTION, LOCATION, DTSTART and DTEND.
* ``mailbox-file``: an .mbox subset covering From, To, Subject and Date
  headers plus the plain-text body.

Malformed records are skipped and counted, never fatal.
"""

from __future__ import annotations

import json
import mailbox
import re
from dataclasses import dataclass, field
from datetime import date, datetime, time
from email.utils import getaddresses, parsedate_to_datetime
from pathlib import Path
from typing import Optional

from .events import Event, EventStore, Source, make_event
from .values import TimeSpan, text_to_scalar

FORMATS = ("event-lines", "calendar-file", "mailbox-file")


class UnknownFormatError(Exception):
    pass


class UnreadableFileError(Exception):
    pass


@dataclass
class IngestReport:
    added: int = 0
    skipped: int = 0
    skip_reasons: list = field(default_factory=list)


class StoreBuilder:
    """Single-writer staging buffer; ``finalize`` sorts and freezes the store."""

    def __init__(self) -> None:
        self._events: list[Event] = []
        self._counter = 0

    def next_id(self, source: str) -> str:
        self._counter += 1
        return f"{source}-{self._counter:06d}"

    def add(self, event: Event) -> None:
        self._events.append(event)

    def finalize(self) -> EventStore:
        return EventStore(self._events)

    def ingest(self, path: str | Path, format: str) -> IngestReport:
        """Parse one export file; returns counts of added and skipped records."""
        if format not in FORMATS:
            raise UnknownFormatError(f"unknown export format: {format}")
        path = Path(path)
        if not path.is_file():
            raise UnreadableFileError(f"not a readable file: {path}")
        if format == "event-lines":
            return self._ingest_event_lines(path)
        if format == "calendar-file":
            return self._ingest_calendar(path)
        return self._ingest_mailbox(path)

    # -- event-lines ---------------------------------------------------------

    def _ingest_event_lines(self, path: Path) -> IngestReport:
        report = IngestReport()
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UnreadableFileError(str(exc)) from exc
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not an object")
                event = self._event_from_record(record)
            except (ValueError, KeyError, TypeError) as exc:
                report.skipped += 1
                report.skip_reasons.append(f"line {lineno}: {exc}")
                continue
            self.add(event)
            report.added += 1
        return report

    def _event_from_record(self, record: dict) -> Event:
        if "source" not in record:
            raise ValueError("missing required field 'source'")
        if "start" not in record:
            raise ValueError("missing required field 'start'")
        source = Source(record["source"])
        start = _parse_instant(record["start"])
        end = _parse_instant(record["end"]) if record.get("end") is not None else start
        span = TimeSpan(start, end)  # raises when start > end
        attrs = {}
        for key, value in record.items():
            if key in ("source", "start", "end", "id"):
                continue
            if isinstance(value, str):
                attrs[key] = text_to_scalar(value)
            elif isinstance(value, list):
                attrs[key] = [text_to_scalar(m) if isinstance(m, str) else m for m in value]
            else:
                attrs[key] = value
        event_id = record.get("id") or self.next_id(source.value)
        return make_event(event_id, source, span, attrs)

    # -- calendar-file (.ics subset) ------------------------------------------

    def _ingest_calendar(self, path: Path) -> IngestReport:
        report = IngestReport()
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise UnreadableFileError(str(exc)) from exc
        for block in _vevent_blocks(_unfold_ics(text)):
            try:
                event = self._event_from_vevent(block)
            except (ValueError, KeyError) as exc:
                report.skipped += 1
                report.skip_reasons.append(f"VEVENT: {exc}")
                continue
            self.add(event)
            report.added += 1
        return report

    def _event_from_vevent(self, props: dict) -> Event:
        if "DTSTART" not in props:
            raise ValueError("VEVENT without DTSTART")
        start = _parse_ics_instant(props["DTSTART"])
        end = _parse_ics_instant(props["DTEND"]) if "DTEND" in props else start
        attrs = {}
        for ics_key, attr_key in (
            ("SUMMARY", "summary"),
            ("DESCRIPTION", "description"),
            ("LOCATION", "location"),
        ):
            if ics_key in props:
                attrs[attr_key] = _unescape_ics(props[ics_key])
        return make_event(
            self.next_id("calendar"), Source.CALENDAR, TimeSpan(start, end), attrs
        )

    # -- mailbox-file (.mbox subset) ------------------------------------------

    def _ingest_mailbox(self, path: Path) -> IngestReport:
        report = IngestReport()
        try:
            box = mailbox.mbox(str(path))
        except OSError as exc:
            raise UnreadableFileError(str(exc)) from exc
        for message in box:
            try:
                event = self._event_from_message(message)
            except (ValueError, KeyError, TypeError) as exc:
                report.skipped += 1
                report.skip_reasons.append(f"message: {exc}")
                continue
            self.add(event)
            report.added += 1
        return report

    def _event_from_message(self, message) -> Event:
        date_header = message.get("Date")
        if not date_header:
            raise ValueError("message without Date header")
        instant = parsedate_to_datetime(date_header)
        if instant.tzinfo is not None:
            instant = instant.replace(tzinfo=None)
        attrs: dict = {}
        sender = _address_names(message.get("From", ""))
        if sender:
            attrs["sender"] = sender[0]
        recipients = _address_names(message.get("To", ""))
        if recipients:
            attrs["recipients"] = recipients
        subject = message.get("Subject")
        if subject:
            attrs["subject"] = str(subject)
        body = _message_body(message)
        if body:
            attrs["body"] = body
        return make_event(
            self.next_id("mail"), Source.MAIL, TimeSpan.point(instant), attrs
        )


def ingest_export(builder: StoreBuilder, path: str | Path, format: str) -> IngestReport:
    """Module-level convenience wrapper over ``StoreBuilder.ingest``."""
    return builder.ingest(path, format)


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def _parse_instant(raw: object) -> datetime:
    if not isinstance(raw, str):
        raise ValueError(f"timestamp must be a string, got {type(raw).__name__}")
    value = text_to_scalar(raw)
    if isinstance(value, datetime):
        return value
    if isinstance(value, date):
        return datetime.combine(value, time.min)
    raise ValueError(f"not an ISO date or datetime: {raw!r}")


def _unfold_ics(text: str) -> list[str]:
    """Undo RFC 5545 line folding (continuations start with space or tab)."""
    lines: list[str] = []
    for raw in text.replace("\r\n", "\n").split("\n"):
        if raw[:1] in (" ", "\t") and lines:
            lines[-1] += raw[1:]
        elif raw:
            lines.append(raw)
    return lines


def _vevent_blocks(lines: list[str]) -> list[dict]:
    blocks = []
    current: Optional[dict] = None
    for line in lines:
        if line == "BEGIN:VEVENT":
            current = {}
            continue
        if line == "END:VEVENT":
            if current is not None:
                blocks.append(current)
            current = None
            continue
        if current is None or ":" not in line:
            continue
        name, value = line.split(":", 1)
        name = name.split(";", 1)[0].upper()
        current[name] = value
    return blocks


def _parse_ics_instant(raw: str) -> datetime:
    raw = raw.strip().rstrip("Z")
    if re.fullmatch(r"\d{8}T\d{6}", raw):
        return datetime.strptime(raw, "%Y%m%dT%H%M%S")
    if re.fullmatch(r"\d{8}", raw):
        return datetime.strptime(raw, "%Y%m%d")
    raise ValueError(f"unsupported .ics timestamp: {raw!r}")


def _unescape_ics(raw: str) -> str:
    return (
        raw.replace("\\n", "\n")
        .replace("\\N", "\n")
        .replace("\\,", ",")
        .replace("\\;", ";")
        .replace("\\\\", "\\")
    )


def _address_names(header: str) -> list[str]:
    names = []
    for display, address in getaddresses([header]):
        names.append(display or address)
    return [n for n in names if n]


def _message_body(message) -> str:
    if message.is_multipart():
        for part in message.walk():
            if part.get_content_type() == "text/plain":
                payload = part.get_payload(decode=True)
                if payload:
                    return payload.decode("utf-8", errors="replace").strip()
        return ""
    payload = message.get_payload(decode=True)
    if payload:
        return payload.decode("utf-8", errors="replace").strip()
    return str(message.get_payload() or "").strip()
