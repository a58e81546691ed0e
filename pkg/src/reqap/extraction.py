"""The EXTRACT operator: augment events with values for requested keys.

Resolution order per event and key: exact attribute match, then the synonym
table, then the frozen mapping (once frozen), then the pluggable value
generator over the event's verbalization. A requested key locks onto one
event key when at least 70% of the first 50 inputs resolved to that same key;
from then on the generator is bypassed entirely. Raw values are parsed under
the requested type tag; anything unparseable leaves a null and flags the
event with ``extraction_miss``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date, datetime, time
from typing import Callable, Mapping, Optional, Protocol, Sequence

from .events import Event, verbalize_event
from .plan.nodes import TypeTag
from .values import Value, value_to_text


class ArityMismatchError(Exception):
    pass


class ValueGenerator(Protocol):
    def generate(self, key: str, verbalization: str, user_info: str) -> Optional[str]:
        """Return a short textual value for the key, or None when absent."""


class NullGenerator:
    """Never produces a value; sufficient when events carry complete attributes."""

    def generate(self, key: str, verbalization: str, user_info: str) -> Optional[str]:
        return None


# ---------------------------------------------------------------------------
# Typed parsing
# ---------------------------------------------------------------------------

_INT_RE = re.compile(r"[-+]?\d+")
_NUM_RE = re.compile(r"[-+]?\d+(?:\.\d+)?")


def parse_typed(raw: object, tag: TypeTag) -> Optional[Value]:
    """Coerce a raw value (typed or text) under a type tag; None on failure."""
    if raw is None:
        return None
    try:
        if tag == TypeTag.STR:
            return raw if isinstance(raw, str) else value_to_text(raw)
        if tag == TypeTag.INT:
            if isinstance(raw, bool):
                return int(raw)
            if isinstance(raw, int):
                return raw
            if isinstance(raw, float):
                return int(raw) if raw.is_integer() else None
            m = _INT_RE.search(str(raw))
            return int(m.group()) if m else None
        if tag == TypeTag.FLOAT:
            if isinstance(raw, bool):
                return float(raw)
            if isinstance(raw, (int, float)):
                return float(raw)
            m = _NUM_RE.search(str(raw))
            return float(m.group()) if m else None
        if tag == TypeTag.DATE:
            if isinstance(raw, datetime):
                return raw.date()
            if isinstance(raw, date):
                return raw
            text = str(raw).strip()
            try:
                return date.fromisoformat(text)
            except ValueError:
                return datetime.fromisoformat(text).date()
        if tag == TypeTag.TIME:
            if isinstance(raw, datetime):
                return raw.time()
            if isinstance(raw, time):
                return raw
            return time.fromisoformat(str(raw).strip())
        if tag == TypeTag.DATETIME:
            if isinstance(raw, datetime):
                return raw
            if isinstance(raw, date):
                return datetime.combine(raw, time.min)
            text = str(raw).strip()
            try:
                return datetime.fromisoformat(text)
            except ValueError:
                return datetime.combine(date.fromisoformat(text), time.min)
        if tag == TypeTag.LIST:
            if isinstance(raw, list):
                return raw
            parts = [part.strip() for part in str(raw).split(",")]
            return [part for part in parts if part]
    except (ValueError, TypeError):
        return None
    return None


# ---------------------------------------------------------------------------
# Synonym table
# ---------------------------------------------------------------------------

DEFAULT_SYNONYMS: dict[str, tuple] = {
    "day": ("start_date",),
    "date": ("start_date",),
    "time": ("start_time",),
    "datetime": ("start_datetime",),
    "purchase_date": ("start_date",),
    "visit_date": ("start_date",),
    "stream_date": ("start_date",),
    "workout_date": ("start_date",),
    "meeting_date": ("start_date",),
    "participants": ("attendees", "recipients"),
    "amount_spent": ("price", "amount"),
    "quantity": ("product_quantity",),
    "artist_names": ("artists",),
    "artist": ("artists",),
    "song_title": ("title",),
    "appointment_details": ("summary", "doctor_type"),
    "restaurant_name": ("location",),
    "place": ("location",),
    "duration_minutes": ("duration",),
}


class SynonymTable:
    """Ordered requested-key to event-key mappings; first present key wins."""

    def __init__(self, mapping: Optional[Mapping[str, Sequence[str]]] = None):
        base = dict(DEFAULT_SYNONYMS)
        if mapping:
            base.update({k: tuple(v) for k, v in mapping.items()})
        self._mapping = base

    def candidates(self, key: str) -> tuple:
        return tuple(self._mapping.get(key, ()))


# ---------------------------------------------------------------------------
# Frozen mapping
# ---------------------------------------------------------------------------

OBSERVING = "observing"
FROZEN = "frozen"
UNFROZEN = "unfrozen"


@dataclass
class KeyMappingState:
    """Per requested-key observation window for the frozen-mapping fast path."""

    window: int = 50
    threshold: float = 0.7
    state: str = OBSERVING
    seen: int = 0
    tally: dict = field(default_factory=dict)
    frozen_key: Optional[str] = None

    def observe(self, event_key: Optional[str]) -> None:
        if self.state != OBSERVING:
            return
        self.seen += 1
        if event_key is not None:
            self.tally[event_key] = self.tally.get(event_key, 0) + 1
        if self.seen == self.window:
            best = max(self.tally.items(), key=lambda kv: (kv[1], kv[0]), default=None)
            if best is not None and best[1] >= self.threshold * self.window:
                self.state = FROZEN
                self.frozen_key = best[0]
            else:
                self.state = UNFROZEN


@dataclass
class ExtractConfig:
    window: int = 50
    threshold: float = 0.7
    freeze_enabled: bool = True


def extract(
    events: Sequence[Event],
    keys: Sequence[str],
    types: Sequence[TypeTag],
    generator: Optional[ValueGenerator] = None,
    user_info: str = "",
    synonyms: Optional[SynonymTable] = None,
    config: Optional[ExtractConfig] = None,
    states: Optional[dict] = None,
) -> list:
    """Augment each event with typed values for the requested keys.

    ``states`` (requested key -> KeyMappingState) may be passed to inspect the
    frozen-mapping behavior; by default fresh state is kept per call, which
    scopes the 50-input window to this operator instance.
    """
    if len(keys) != len(types):
        raise ArityMismatchError(f"{len(keys)} keys but {len(types)} types")
    generator = generator or NullGenerator()
    synonyms = synonyms or SynonymTable()
    config = config or ExtractConfig()
    if states is None:
        states = {}
    for key in keys:
        states.setdefault(key, KeyMappingState(config.window, config.threshold))

    out = []
    for event in events:
        extra: dict[str, Value] = {}
        missed = False
        for key, tag in zip(keys, types):
            state = states[key]
            raw, resolved_key = _resolve(
                event, key, state, generator, user_info, synonyms, config
            )
            if config.freeze_enabled:
                state.observe(resolved_key)
            value = parse_typed(raw, tag)
            extra[key] = value
            if value is None:
                missed = True
        if missed:
            extra["extraction_miss"] = True
        out.append(event.with_attrs(extra))
    return out


def _resolve(
    event: Event,
    key: str,
    state: KeyMappingState,
    generator: ValueGenerator,
    user_info: str,
    synonyms: SynonymTable,
    config: ExtractConfig,
):
    """Return (raw value, resolving event key)."""
    if event.has(key) and event.get(key) is not None:
        return event.get(key), key
    for candidate in synonyms.candidates(key):
        if event.has(candidate) and event.get(candidate) is not None:
            return event.get(candidate), candidate
    if config.freeze_enabled and state.state == FROZEN:
        frozen_value = event.get(state.frozen_key)
        if frozen_value is not None:
            return frozen_value, state.frozen_key
        # Frozen key absent on this event: fall through to generation.
    text = generator.generate(key, verbalize_event(event), user_info)
    if text is None:
        return None, None
    # Attribute the generated value to an event key when it matches exactly one.
    matches = [k for k, v in event.attrs.items() if value_to_text(v) == text]
    resolved = matches[0] if len(matches) == 1 else None
    return text, resolved


# ---------------------------------------------------------------------------
# Rule-based default generator
# ---------------------------------------------------------------------------

_SPORTS = (
    "soccer",
    "running",
    "cycling",
    "swimming",
    "yoga",
    "tennis",
    "badminton",
    "hiking",
    "weight training",
    "gym",
    "football",
    "basketball",
)

_CUISINE_CUES = (
    ("italian", "Italian"),
    ("pizza", "Italian"),
    ("pasta", "Italian"),
    ("risotto", "Italian"),
    ("japanese", "Japanese"),
    ("sushi", "Japanese"),
    ("ramen", "Japanese"),
    ("mexican", "Mexican"),
    ("taco", "Mexican"),
    ("burrito", "Mexican"),
    ("indian", "Indian"),
    ("curry", "Indian"),
    ("greek", "Greek"),
    ("souvlaki", "Greek"),
    ("gyros", "Greek"),
    ("french", "French"),
    ("croissant", "French"),
    ("chinese", "Chinese"),
    ("dumpling", "Chinese"),
    ("thai", "Thai"),
)

_PLACE_RE = re.compile(r"\bat ((?:[A-Z][\w']*)(?:\s+[A-Z][\w']*)*)")
_WITH_RE = re.compile(r"\b[Ww]ith ([A-Z][\w']*(?:\s[A-Z][\w']*)*(?:(?:,| and) [A-Z][\w']*(?:\s[A-Z][\w']*)*)*)")


def _first_number(pattern: str) -> Callable[[str, str], Optional[str]]:
    rx = re.compile(pattern)

    def rule(text: str, user_info: str) -> Optional[str]:
        m = rx.search(text)
        return m.group(1) if m else None

    return rule


def _cuisine_rule(text: str, user_info: str) -> Optional[str]:
    lowered = text.lower()
    for cue, cuisine in _CUISINE_CUES:
        if cue in lowered:
            return cuisine
    return None


def _sport_rule(text: str, user_info: str) -> Optional[str]:
    lowered = text.lower()
    for sport in _SPORTS:
        if sport in lowered:
            return sport
    return None


def _place_rule(text: str, user_info: str) -> Optional[str]:
    m = _PLACE_RE.search(text)
    return m.group(1) if m else None


def _user_names(user_info: str) -> list:
    names = []
    for line in user_info.splitlines():
        if ":" in line:
            names.append(line.split(":", 1)[1].strip())
    return [n for n in names if n]


def _participants_rule(text: str, user_info: str) -> Optional[str]:
    m = _WITH_RE.search(text)
    if m:
        raw = m.group(1)
        parts = [p.strip() for chunk in raw.split(" and ") for p in chunk.split(",")]
        parts = [p for p in parts if p]
        if parts:
            return ", ".join(parts)
    found = [(text.find(name), name) for name in _user_names(user_info) if name in text]
    if found:
        return ", ".join(name for _, name in sorted(found))
    return None


_DOCTOR_RE = re.compile(
    r"\b(dentist|gp|ophthalmologist|dermatologist|paediatrician|veterinarian)\b", re.IGNORECASE
)


def _doctor_rule(text: str, user_info: str) -> Optional[str]:
    m = _DOCTOR_RE.search(text)
    return m.group(1).lower() if m else None


def _appointment_details_rule(text: str, user_info: str) -> Optional[str]:
    doctor_type = _doctor_rule(text, user_info)
    return f"{doctor_type.capitalize()} appointment" if doctor_type else None


_DEFAULT_RULES: dict[str, tuple] = {
    "cuisine": (_cuisine_rule,),
    "workout_type": (_sport_rule,),
    "sport": (_sport_rule,),
    "duration": (_first_number(r"(\d+)-minute"),),
    "duration_minutes": (_first_number(r"(\d+)-minute"),),
    "maximum_heart_rate": (_first_number(r"peaked at (\d+)"),),
    "minimum_heart_rate": (_first_number(r"below (\d+)"),),
    "average_heart_rate": (_first_number(r"averaged (\d+(?:\.\d+)?)"),),
    "distance_km": (_first_number(r"(\d+(?:\.\d+)?) km"),),
    "distance": (_first_number(r"(\d+(?:\.\d+)?) km"),),
    "title": (_first_number(r"'([^']+)'"),),
    "movie_title": (_first_number(r"'([^']+)'"),),
    "tvseries_title": (_first_number(r"'([^']+)'"),),
    "artist_names": (_first_number(r"\bby ([^.!;\n|]+?)(?=[.!;\n|]|$)"),),
    "artists": (_first_number(r"\bby ([^.!;\n|]+?)(?=[.!;\n|]|$)"),),
    "product": (_first_number(r"\b(?:Ordered|ordered) (?:\d+ x )?(.+?) online"),),
    "amount_spent": (_first_number(r"for (\d+(?:\.\d+)?) EUR"),),
    "quantity": (_first_number(r"\b(?:Ordered|ordered) (\d+) x "),),
    "category": (_first_number(r"from the ([\w &]+?) section"),),
    "participants": (_participants_rule,),
    "location": (_place_rule,),
    "restaurant_name": (_place_rule,),
    "place": (_place_rule,),
    "destination": (_first_number(r"\b[Tt]rip to ((?:[A-Z][\w']*)(?:\s+[A-Z][\w']*)*)"),),
    "doctor_type": (_doctor_rule,),
    "appointment_details": (_appointment_details_rule,),
}


class HttpValueGenerator:
    """Learned-generator plug-in over the same HTTP wire contract as the
    retrieval classifiers: request ``{"query": key, "candidate": text}``,
    response ``{"label": value-or-null, "score": ...}``."""

    def __init__(self, endpoint: str, timeout: float = 10.0, max_retries: int = 1):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_retries = max_retries

    def generate(self, key: str, verbalization: str, user_info: str) -> Optional[str]:
        import json
        import urllib.request

        candidate = verbalization if not user_info else f"{verbalization}\n{user_info}"
        body = json.dumps({"query": key, "candidate": candidate}).encode("utf-8")
        last_error: Optional[Exception] = None
        for _ in range(self.max_retries + 1):
            try:
                request = urllib.request.Request(
                    self.endpoint, data=body, headers={"Content-Type": "application/json"}
                )
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    payload = json.loads(response.read().decode("utf-8"))
                label = payload.get("label")
                return None if label is None else str(label)
            except Exception as exc:  # noqa: BLE001 - transport errors retried
                last_error = exc
        raise RuntimeError(f"extractor endpoint failed: {last_error}")


class RuleBasedGenerator:
    """Deterministic keyword/regex extraction rules per requested key."""

    def __init__(self, extra_rules: Optional[Mapping[str, Sequence]] = None):
        self._rules = {k: tuple(v) for k, v in _DEFAULT_RULES.items()}
        if extra_rules:
            for key, rules in extra_rules.items():
                self._rules[key] = tuple(rules) + self._rules.get(key, ())
        self.calls = 0

    def generate(self, key: str, verbalization: str, user_info: str) -> Optional[str]:
        self.calls += 1
        for rule in self._rules.get(key, ()):
            value = rule(verbalization, user_info)
            if value is not None:
                return value
        return None
