"""Observable-event rendering: structured records and template verbalizations.

Streams, workouts and purchases stay structured with high probability and
additionally verbalize with a small one; all other event types always
verbalize into calendar entries, mails or social media posts. Template
variants differ in filler while embedding the canonical facts in fixed
phrasings a lexical retriever can find and the rule-based extractor can
recover. Every observable inherits its canonical event's timespan, so
redundant captures of one happening always overlap and de-duplicate.

Observable ids are ``<canonical id>/o<n>``: the hidden linkage used for gold
relevance labels, never interpreted by the engine.
"""

from __future__ import annotations

import random
from typing import Optional

from ..events import Event, EventStore, Source, make_event
from .events_gen import CanonicalEvent, GenerationConfig, STRUCTURED_TYPES

MODES = ("structured", "calendar", "mail", "social", "mixed-probability")


class UnknownModeError(Exception):
    pass


_CANONICAL_SOURCE = {
    "music_stream": Source.MUSIC_STREAM,
    "movie_stream": Source.MOVIE_STREAM,
    "tvseries_stream": Source.TVSERIES_STREAM,
    "online_purchase": Source.ONLINE_PURCHASE,
    "workout": Source.WORKOUT,
}

# Primary unstructured source distribution per event type.
_UNSTRUCTURED_DIST = {
    "workout": (("social_media", 0.7), ("calendar", 0.3)),
    "music_stream": (("social_media", 1.0),),
    "movie_stream": (("social_media", 1.0),),
    "tvseries_stream": (("social_media", 1.0),),
    "online_purchase": (("mail", 1.0),),
    "meeting": (("calendar", 0.6), ("mail", 0.25), ("social_media", 0.15)),
    "doctor_appointment": (("calendar", 0.85), ("mail", 0.15)),
    "anniversary": (("calendar", 0.5), ("social_media", 0.3), ("mail", 0.2)),
    "milestone": (("mail", 0.5), ("social_media", 0.5)),
    "travel": (("calendar", 0.8), ("mail", 0.2)),
}


def _pick(rng: random.Random, dist) -> str:
    roll = rng.random()
    cumulative = 0.0
    for value, weight in dist:
        cumulative += weight
        if roll < cumulative:
            return value
    return dist[-1][0]


def _join_names(names) -> str:
    names = list(names)
    if len(names) <= 1:
        return names[0] if names else ""
    return ", ".join(names[:-1]) + " and " + names[-1]


# ---------------------------------------------------------------------------
# Structured observable forms
# ---------------------------------------------------------------------------


def _structured_attrs(canonical: CanonicalEvent) -> dict:
    attrs = canonical.attrs
    if canonical.event_type == "online_purchase":
        return {
            "product": attrs["product"],
            "category": attrs["category"],
            "product_quantity": attrs["quantity"],
            "order": f"{attrs['quantity']} x {attrs['product']}",
            "price": f"{attrs['amount']:.2f} EUR",
        }
    if canonical.event_type in ("music_stream", "movie_stream", "tvseries_stream"):
        out = dict(attrs)
        out["duration_unit"] = "seconds"
        return out
    return dict(attrs)  # workout attrs already carry duration_unit


# ---------------------------------------------------------------------------
# Text templates (5 filler variants per type, fixed fact phrasings)
# ---------------------------------------------------------------------------


def _music_text(a: dict, variant: int) -> str:
    core = f"'{a['title']}' by {', '.join(a['artists'])};"
    return (
        f"Had this song {core} on repeat all evening.",
        f"Streaming {core} this song is everything.",
        f"Tonight the music was {core} pure magic.",
        f"Current song obsession: {core} play it loud.",
        f"Kicked back with some music {core} good vibes only.",
    )[variant % 5]


def _movie_text(a: dict, variant: int) -> str:
    minutes = a["duration"] // 60
    core = f"'{a['movie_title']}'; a {minutes}-minute ride"
    return (
        f"Movie night. Watched {core}.",
        f"Finally watched {core} worth every second.",
        f"Popcorn and a movie: {core}.",
        f"Home movie evening. Screened {core}.",
        f"Weekend movie pick: {core}.",
    )[variant % 5]


def _tv_text(a: dict, variant: int) -> str:
    core = f"'{a['tvseries_title']}'; season {a['tvseries_season']} episode {a['episode_number']}"
    return (
        f"Binged {core} tonight.",
        f"One more of {core} before bed.",
        f"Caught up on {core}.",
        f"Comfort watch: {core}.",
        f"Could not stop at {core}.",
    )[variant % 5]


def _purchase_body(a: dict, variant: int) -> str:
    core = (
        f"Ordered {a['quantity']} x {a['product']} online for {a['amount']:.2f} EUR, "
        f"from the {a['category']} section."
    )
    return (
        f"Thanks for shopping with us. {core} It ships soon.",
        f"Your receipt. {core} Track it in your account.",
        f"Order confirmed. {core} Thank you.",
        f"Hello, a quick receipt for your records. {core}",
        f"We packed your order. {core} Enjoy.",
    )[variant % 5]


def _workout_text(a: dict, variant: int) -> str:
    core = (
        f"{a['duration']}-minute {a['workout_type']} session. "
        f"Heart rate peaked at {a['maximum_heart_rate']}, "
        f"averaged {a['average_heart_rate']}, and never dropped below "
        f"{a['minimum_heart_rate']}."
    )
    text = (
        f"Pumped up after a grueling {core} Feeling strong.",
        f"Wrapped up a {core} Earned my dinner.",
        f"Solid {core} Legs are jelly.",
        f"Done with a {core} Sleep will be good.",
        f"That {core} It hurt in the best way.",
    )[variant % 5]
    if "distance_km" in a:
        text += f" Covered {a['distance_km']} km."
    return text


def _meeting_fields(a: dict, variant: int) -> dict:
    participants = _join_names(a["participants"])
    kind = a["meeting_kind"]
    summary = (
        f"{kind.capitalize()} with {participants}",
        f"{kind.capitalize()} with {participants}",
        f"Catch-up {kind} with {participants}",
        f"{kind.capitalize()} with {participants}",
        f"Long overdue {kind} with {participants}",
    )[variant % 5]
    description = f"{a['cuisine']} food" if "cuisine" in a else f"{kind} plans"
    return {"summary": summary, "location": a["location"], "description": description}


def _meeting_text(a: dict, variant: int) -> str:
    participants = _join_names(a["participants"])
    core = f"{a['meeting_kind']} with {participants} at {a['location']}"
    extra = f" The {a['cuisine']} food was great." if "cuisine" in a else ""
    return (
        f"Lovely {core} today.{extra}",
        f"Great {core}.{extra}",
        f"Finally had {core}.{extra}",
        f"Sun was out for our {core}.{extra}",
        f"Good talks over {core}.{extra}",
    )[variant % 5]


def _meeting_mail(a: dict, variant: int) -> dict:
    participants = _join_names(a["participants"])
    core = f"{a['meeting_kind']} at {a['location']} with {participants}"
    extra = f" Craving {a['cuisine']} food already." if "cuisine" in a else ""
    body = (
        f"Hey. Confirming our {core}.{extra} See you there.",
        f"Hi. Still on for the {core}?{extra} Looking forward.",
        f"Quick note. The {core} is set.{extra}",
        f"Reminder about the {core}.{extra} Do not be late.",
        f"All booked for the {core}.{extra}",
    )[variant % 5]
    return {
        "sender": a["participants"][0],
        "subject": f"About our {a['meeting_kind']}",
        "body": body,
    }


def _doctor_fields(a: dict, variant: int) -> dict:
    return {
        "summary": a["appointment_details"],
        "location": a["location"],
        "description": f"Regular {a['doctor_type']} check-up",
    }


def _doctor_mail(a: dict, variant: int) -> dict:
    body = (
        f"Reminder. Your {a['doctor_type']} appointment at {a['location']} is coming up.",
        f"Please remember the {a['doctor_type']} appointment at {a['location']}.",
        f"Confirming your {a['doctor_type']} appointment at {a['location']}.",
        f"This is a notice for your {a['doctor_type']} appointment at {a['location']}.",
        f"Your {a['doctor_type']} appointment at {a['location']} is scheduled.",
    )[variant % 5]
    return {
        "sender": a["location"],
        "subject": "Appointment reminder",
        "body": body,
    }


_ANNIVERSARY_LABELS = {
    "birthday": "my birthday",
    "child_birthday": "the birthday",
    "pet_anniversary": "our pet anniversary",
    "valentines_day": "Valentines Day",
    "halloween": "Halloween",
    "christmas": "Christmas",
    "new_years_eve": "New Years Eve",
}


def _anniversary_fields(a: dict, variant: int) -> dict:
    label = _ANNIVERSARY_LABELS.get(a["anniversary_type"], a["anniversary_type"])
    person = a.get("person")
    summary = f"{label.capitalize()} party" + (f" for {person}" if person else "")
    return {"summary": summary, "description": "celebration"}


def _anniversary_text(a: dict, variant: int) -> str:
    label = _ANNIVERSARY_LABELS.get(a["anniversary_type"], a["anniversary_type"])
    person = a.get("person")
    suffix = f" with {person}" if person else ""
    return (
        f"Celebrating {label}{suffix} tonight. What a blast.",
        f"Happy {label}{suffix}. Grateful for everyone.",
        f"{label.capitalize()}{suffix} was wonderful this year.",
        f"Decorations up and cake out for {label}{suffix}.",
        f"Ending the day smiling after {label}{suffix}.",
    )[variant % 5]


def _milestone_text(a: dict, variant: int) -> str:
    return (
        f"Big news. {a['details']}. Exciting times ahead.",
        f"{a['details']}. Still sinking in.",
        f"Milestone unlocked. {a['details']}.",
        f"Today was the day. {a['details']}.",
        f"So proud to share this. {a['details']}.",
    )[variant % 5]


def _travel_fields(a: dict, variant: int) -> dict:
    return {
        "summary": f"Trip to {a['destination']}",
        "description": f"Holiday in {a['region']}",
    }


def _travel_mail(a: dict, variant: int) -> dict:
    body = (
        f"Your trip to {a['destination']} is booked. Enjoy {a['region']}.",
        f"Itinerary attached for the trip to {a['destination']}.",
        f"Everything is confirmed for your trip to {a['destination']}.",
        f"Pack your bags. The trip to {a['destination']} starts soon.",
        f"Final documents for your trip to {a['destination']}.",
    )[variant % 5]
    return {
        "sender": "Travel Desk",
        "subject": f"Trip to {a['destination']}",
        "body": body,
    }


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def _social_attrs(canonical: CanonicalEvent, variant: int) -> dict:
    a = canonical.attrs
    kind = canonical.event_type
    if kind == "music_stream":
        return {"text": _music_text(a, variant)}
    if kind == "movie_stream":
        return {"text": _movie_text(a, variant)}
    if kind == "tvseries_stream":
        return {"text": _tv_text(a, variant)}
    if kind == "workout":
        return {"text": _workout_text(a, variant)}
    if kind == "meeting":
        return {"text": _meeting_text(a, variant)}
    if kind == "anniversary":
        return {"text": _anniversary_text(a, variant)}
    if kind == "milestone":
        return {"text": _milestone_text(a, variant)}
    return {"text": f"{kind} today."}


def _calendar_attrs(canonical: CanonicalEvent, variant: int) -> dict:
    a = canonical.attrs
    kind = canonical.event_type
    if kind == "meeting":
        return _meeting_fields(a, variant)
    if kind == "doctor_appointment":
        return _doctor_fields(a, variant)
    if kind == "anniversary":
        return _anniversary_fields(a, variant)
    if kind == "travel":
        return _travel_fields(a, variant)
    if kind == "workout":
        return {
            "summary": f"{a['workout_type'].capitalize()} workout",
            "description": _workout_text(a, variant),
        }
    return {"summary": kind.replace("_", " "), "description": _social_attrs(canonical, variant)["text"]}


def _mail_attrs(canonical: CanonicalEvent, variant: int) -> dict:
    a = canonical.attrs
    kind = canonical.event_type
    if kind == "online_purchase":
        return {
            "sender": "orders@shop.example",
            "subject": "Order confirmation",
            "body": _purchase_body(a, variant),
        }
    if kind == "meeting":
        return _meeting_mail(a, variant)
    if kind == "doctor_appointment":
        return _doctor_mail(a, variant)
    if kind == "travel":
        return _travel_mail(a, variant)
    return {
        "sender": "me",
        "subject": kind.replace("_", " "),
        "body": _social_attrs(canonical, variant)["text"],
    }


def _unstructured_event(
    canonical: CanonicalEvent, source_name: str, variant: int, obs_id: str
) -> Event:
    if source_name == "calendar":
        attrs = _calendar_attrs(canonical, variant)
    elif source_name == "mail":
        attrs = _mail_attrs(canonical, variant)
    else:
        attrs = _social_attrs(canonical, variant)
    return make_event(obs_id, source_name, canonical.span, attrs)


def verbalize(
    canonical: CanonicalEvent,
    mode: str = "mixed-probability",
    seed: int = 0,
    config: Optional[GenerationConfig] = None,
) -> list:
    """Observable event(s) for one canonical event; deterministic per seed."""
    if mode not in MODES:
        raise UnknownModeError(f"unknown verbalization mode: {mode}")
    config = config or GenerationConfig()
    rng = random.Random(f"verbalize:{seed}:{canonical.ce_id}")
    variant = rng.randrange(5)
    structured = canonical.event_type in STRUCTURED_TYPES
    dist = _UNSTRUCTURED_DIST[canonical.event_type]

    def structured_event(index: int) -> Event:
        return make_event(
            f"{canonical.ce_id}/o{index}",
            _CANONICAL_SOURCE[canonical.event_type],
            canonical.span,
            _structured_attrs(canonical),
        )

    if mode == "structured" and structured:
        return [structured_event(0)]
    if mode in ("calendar", "mail", "social"):
        # forced modes render the canonical first variant, reproducibly
        source_name = "social_media" if mode == "social" else mode
        return [_unstructured_event(canonical, source_name, 0, f"{canonical.ce_id}/o0")]
    if mode == "structured":  # no structured form exists; use the primary one
        return [_unstructured_event(canonical, _pick(rng, dist), variant, f"{canonical.ce_id}/o0")]

    # mixed-probability
    out: list[Event] = []
    if structured:
        if rng.random() < config.p_struct:
            out.append(structured_event(0))
            if rng.random() < config.p_extra_verbalization:
                source_name = _pick(rng, dist)
                out.append(
                    _unstructured_event(canonical, source_name, variant, f"{canonical.ce_id}/o1")
                )
        else:
            out.append(
                _unstructured_event(canonical, _pick(rng, dist), variant, f"{canonical.ce_id}/o0")
            )
        return out
    primary = _pick(rng, dist)
    out.append(_unstructured_event(canonical, primary, variant, f"{canonical.ce_id}/o0"))
    if rng.random() < config.p_extra_verbalization:
        alternates = [name for name, _ in _UNSTRUCTURED_DIST["meeting"] if name != primary]
        out.append(
            _unstructured_event(
                canonical, alternates[0], (variant + 1) % 5, f"{canonical.ce_id}/o1"
            )
        )
    return out


def canonical_id_of(observable_id: str) -> str:
    """Recover the hidden canonical linkage from an observable id."""
    return observable_id.split("/", 1)[0]


def build_observable_store(
    canonicals, mode: str = "mixed-probability", seed: int = 0, config: Optional[GenerationConfig] = None
) -> tuple:
    """Verbalize a canonical list into an EventStore plus the linkage map."""
    events: list[Event] = []
    linkage: dict[str, str] = {}
    for canonical in canonicals:
        for event in verbalize(canonical, mode=mode, seed=seed, config=config):
            events.append(event)
            linkage[event.id] = canonical.ce_id
    return EventStore(events), linkage


def build_canonical_store(canonicals) -> EventStore:
    """Canonical events as an event store for reference-plan evaluation."""
    events = []
    for canonical in canonicals:
        source = _CANONICAL_SOURCE.get(canonical.event_type, Source.CALENDAR)
        attrs = dict(canonical.attrs)
        attrs["event_type"] = canonical.event_type
        events.append(make_event(canonical.ce_id, source, canonical.span, attrs))
    return EventStore(events)
