"""Canonical event generation: seeded, schema-complete, behavior-clustered.

Events are drawn per type from configured daily/weekly rates. Streams come in
morning/evening listening sessions with songs laid back to back (never
overlapping); screen time, workouts, purchases, meetings and appointments
occupy disjoint daytime windows; milestones and anniversaries are placed from
the persona's own dates. Counts scale linearly with the period length.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import asdict, dataclass
from datetime import date, datetime, time, timedelta
from typing import Optional

from ..values import TimeSpan
from . import pools
from .personas import Persona

STRUCTURED_TYPES = ("music_stream", "movie_stream", "tvseries_stream", "online_purchase", "workout")


@dataclass
class CanonicalEvent:
    """Ground-truth event; never visible to the engine."""

    ce_id: str
    event_type: str
    span: TimeSpan
    attrs: dict


@dataclass
class GenerationConfig:
    """Rates and probabilities; None falls back to the persona's frequencies."""

    music_per_day: Optional[float] = None
    movies_per_week: Optional[float] = None
    tv_episodes_per_week: Optional[float] = None
    workouts_per_week: Optional[float] = None
    purchases_per_week: Optional[float] = None
    meetings_per_week: float = 1.5
    doctor_per_year: float = 8.0
    trips_per_year: float = 1.5
    p_struct: float = 0.85
    p_extra_verbalization: float = 0.1

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GenerationConfig":
        return cls(**json.loads(text))


def _poisson(rng: random.Random, lam: float) -> int:
    if lam <= 0:
        return 0
    threshold = math.exp(-lam)
    k = 0
    product = rng.random()
    while product > threshold:
        k += 1
        product *= rng.random()
    return k


def _at(day: date, hour: int, minute: int = 0) -> datetime:
    return datetime.combine(day, time(hour, minute))


def _days(start: date, end: date):
    current = start
    while current < end:
        yield current
        current += timedelta(days=1)


class _TypeCounter:
    def __init__(self) -> None:
        self.events: list[CanonicalEvent] = []

    def add(self, event_type: str, span: TimeSpan, attrs: dict) -> None:
        self.events.append(CanonicalEvent("", event_type, span, attrs))


def generate_canonical_events(
    persona: Persona,
    start: date,
    end: date,
    config: Optional[GenerationConfig] = None,
    seed: int = 0,
) -> list:
    """All canonical events for the period [start, end); ids in time order."""
    if end <= start:
        raise ValueError("period must be non-empty")
    config = config or GenerationConfig()
    rng = random.Random(f"events:{seed}:{persona.name}")
    out = _TypeCounter()

    _gen_music(out, persona, start, end, config, rng)
    _gen_movies_tv(out, persona, start, end, config, rng)
    _gen_workouts(out, persona, start, end, config, rng)
    _gen_purchases(out, persona, start, end, config, rng)
    _gen_meetings(out, persona, start, end, config, rng)
    _gen_doctor(out, persona, start, end, config, rng)
    _gen_travel(out, persona, start, end, config, rng)
    _gen_anniversaries(out, persona, start, end)
    _gen_milestones(out, persona, start, end)

    events = sorted(out.events, key=lambda e: (e.span.start, e.event_type, sorted(e.attrs.items()).__repr__()))
    for index, event in enumerate(events):
        event.ce_id = f"ce-{index:06d}"
    return events


# -- streams ---------------------------------------------------------------


def _song_pool(persona: Persona) -> list:
    seen = []
    for genre in persona.music_genres:
        seen.extend(pools.MUSIC[genre])
    return seen


def _gen_music(out, persona, start, end, config, rng) -> None:
    rate = config.music_per_day if config.music_per_day is not None else persona.music_per_day
    songs = _song_pool(persona)
    if not songs or rate <= 0:
        return
    windows = ((7, 0, 9, 0), (18, 0, 20, 0))  # morning and evening sessions
    for day in _days(start, end):
        count = _poisson(rng, rate)
        if count == 0:
            continue
        split = count // 2 if count > 12 else 0
        for window, in_window in zip(windows, (split, count - split)):
            if in_window == 0:
                continue
            h1, m1, h2, m2 = window
            cursor = _at(day, h1, m1) + timedelta(minutes=rng.randrange(0, 20))
            window_end = _at(day, h2, m2)
            for _ in range(in_window):
                duration = rng.randrange(150, 300)
                song_end = cursor + timedelta(seconds=duration)
                if song_end > window_end:
                    break
                title, artists = rng.choice(songs)
                out.add(
                    "music_stream",
                    TimeSpan(cursor, song_end),
                    {
                        "title": title,
                        "artists": list(artists),
                        "duration": duration,
                        "stream_style": "music",
                    },
                )
                cursor = song_end + timedelta(seconds=rng.randrange(30, 90))


def _gen_movies_tv(out, persona, start, end, config, rng) -> None:
    movie_rate = (
        config.movies_per_week if config.movies_per_week is not None else persona.movies_per_week
    )
    tv_rate = (
        config.tv_episodes_per_week
        if config.tv_episodes_per_week is not None
        else persona.tv_episodes_per_week
    )
    series_state: dict[str, tuple] = {}
    for day in _days(start, end):
        slot = _at(day, 20, 15)
        if movie_rate > 0 and rng.random() < movie_rate / 7.0:
            title = rng.choice(pools.MOVIES[rng.choice(persona.movie_genres)])
            duration = rng.randrange(5400, 9000)
            out.add(
                "movie_stream",
                TimeSpan(slot, slot + timedelta(seconds=duration)),
                {
                    "movie_title": title,
                    "stream_full_title": title,
                    "duration": duration,
                    "stream_style": "movie",
                },
            )
            continue
        if tv_rate > 0 and rng.random() < tv_rate / 7.0:
            genre = rng.choice(persona.tv_genres)
            series, seasons = rng.choice(pools.TV_SERIES[genre])
            season, episode = series_state.get(series, (1, 0))
            episode += 1
            if episode > 10:
                season, episode = (season % seasons) + 1, 1
            series_state[series] = (season, episode)
            episodes_tonight = rng.randrange(1, 3)
            cursor = slot
            for _ in range(episodes_tonight):
                duration = rng.randrange(1200, 2100)
                out.add(
                    "tvseries_stream",
                    TimeSpan(cursor, cursor + timedelta(seconds=duration)),
                    {
                        "tvseries_title": series,
                        "season_name": f"{series}, season {season}",
                        "episode_name": f"Episode {episode}",
                        "episode_number": episode,
                        "tvseries_season": season,
                        "duration": duration,
                        "stream_style": "tv_series",
                    },
                )
                cursor += timedelta(seconds=duration + 120)


# -- activity --------------------------------------------------------------

_DISTANCE_SPORTS = ("running", "cycling", "swimming", "hiking")


def _gen_workouts(out, persona, start, end, config, rng) -> None:
    rate = (
        config.workouts_per_week
        if config.workouts_per_week is not None
        else persona.workouts_per_week
    )
    if rate <= 0 or not persona.workout_types:
        return
    for day in _days(start, end):
        if rng.random() >= rate / 7.0:
            continue
        workout_type = rng.choice(persona.workout_types)
        duration = rng.randrange(30, 105)
        begin = _at(day, 16, 0) + timedelta(minutes=rng.randrange(0, 10))
        max_hr = rng.randrange(150, 195)
        min_hr = rng.randrange(95, 125)
        avg_hr = round(rng.uniform(min_hr + 10, max_hr - 10), 2)
        attrs = {
            "workout_type": workout_type,
            "duration": duration,
            "duration_unit": "min",
            "minimum_heart_rate": min_hr,
            "maximum_heart_rate": max_hr,
            "average_heart_rate": avg_hr,
        }
        if workout_type in _DISTANCE_SPORTS:
            attrs["distance_km"] = round(rng.uniform(2.0, 21.0), 1)
        out.add("workout", TimeSpan(begin, begin + timedelta(minutes=duration)), attrs)


def _gen_purchases(out, persona, start, end, config, rng) -> None:
    rate = (
        config.purchases_per_week
        if config.purchases_per_week is not None
        else persona.purchases_per_week
    )
    if rate <= 0 or not persona.shopping_categories:
        return
    for day in _days(start, end):
        if rng.random() >= rate / 7.0:
            continue
        category = rng.choice(persona.shopping_categories)
        product, price = rng.choice(pools.PRODUCTS[category])
        quantity = 1 if rng.random() < 0.8 else rng.randrange(2, 4)
        instant = _at(day, 10, 0) + timedelta(minutes=rng.randrange(0, 60))
        out.add(
            "online_purchase",
            TimeSpan.point(instant),
            {
                "product": product,
                "category": category,
                "quantity": quantity,
                "amount": round(price * quantity, 2),
                "currency": "EUR",
            },
        )


_MEETING_KINDS = ("lunch", "coffee", "picnic", "dinner")


def _make_meeting(out, persona, day, rng, hour=12) -> None:
    participants = rng.sample(persona.friends, rng.randrange(1, min(3, len(persona.friends)) + 1))
    if rng.random() < 0.2:
        participants = ["Mum", "Dad"]
    kind = rng.choice(_MEETING_KINDS)
    attrs: dict = {"participants": participants, "meeting_kind": kind}
    if rng.random() < 0.5 and persona.cuisines:
        cuisine = rng.choice(persona.cuisines)
        attrs["cuisine"] = cuisine
        attrs["location"] = rng.choice(pools.CUISINES[cuisine])
    else:
        attrs["location"] = rng.choice(pools.MEETING_PLACES)
    begin = _at(day, hour, 0) + timedelta(minutes=rng.randrange(0, 30))
    out.add("meeting", TimeSpan(begin, begin + timedelta(minutes=rng.randrange(60, 120))), attrs)


def _gen_meetings(out, persona, start, end, config, rng) -> None:
    if config.meetings_per_week <= 0 or not persona.friends:
        return
    for day in _days(start, end):
        if rng.random() < config.meetings_per_week / 7.0:
            _make_meeting(out, persona, day, rng)


def _gen_doctor(out, persona, start, end, config, rng) -> None:
    if config.doctor_per_year <= 0:
        return
    for day in _days(start, end):
        if day.weekday() >= 5 or rng.random() >= config.doctor_per_year / 365.0:
            continue
        doctor_type = rng.choice(pools.DOCTOR_TYPES)
        begin = _at(day, 14, 30) + timedelta(minutes=rng.randrange(0, 90))
        out.add(
            "doctor_appointment",
            TimeSpan(begin, begin + timedelta(minutes=rng.randrange(20, 60))),
            {
                "doctor_type": doctor_type,
                "location": rng.choice(pools.CLINICS),
                "appointment_details": f"{doctor_type.capitalize()} appointment",
            },
        )


def _gen_travel(out, persona, start, end, config, rng) -> None:
    if config.trips_per_year <= 0 or not persona.travel_regions:
        return
    total_days = (end - start).days
    trips = _poisson(rng, config.trips_per_year * total_days / 365.0)
    taken: list[tuple] = []
    for _ in range(trips):
        region = rng.choice(persona.travel_regions)
        destination = rng.choice(pools.TRAVEL[region])
        first_offset = rng.randrange(max(total_days - 10, 1))
        length = rng.randrange(4, 10)
        if any(first_offset <= hi and lo <= first_offset + length for lo, hi in taken):
            continue  # trips never overlap
        taken.append((first_offset, first_offset + length))
        first_day = start + timedelta(days=first_offset)
        span = TimeSpan(_at(first_day, 9, 0), _at(first_day + timedelta(days=length), 18, 0))
        out.add("travel", span, {"destination": destination, "region": region})
        activities = rng.randrange(2, 6)
        # distinct days: concurrent meetings would blur into one at de-duplication
        for day_offset in rng.sample(range(1, length + 1), min(activities, length)):
            _make_meeting(out, persona, first_day + timedelta(days=day_offset), rng, hour=19)


def _gen_anniversaries(out, persona, start, end) -> None:
    def yearly(month: int, day_of_month: int, anniversary_type: str, person: str = "") -> None:
        for year in range(start.year, end.year + 1):
            try:
                when = date(year, month, day_of_month)
            except ValueError:
                continue
            if start <= when < end:
                attrs = {"anniversary_type": anniversary_type}
                if person:
                    attrs["person"] = person
                out.add(
                    "anniversary",
                    TimeSpan(_at(when, 19, 30), _at(when, 23, 0)),
                    attrs,
                )

    yearly(persona.birth_date.month, persona.birth_date.day, "birthday", persona.name)
    for kid in persona.kids:
        yearly(kid.birth_date.month, kid.birth_date.day, "child_birthday", kid.name)
    for pet in persona.pets:
        yearly(pet.start.month, pet.start.day, "pet_anniversary", pet.name)
    yearly(2, 14, "valentines_day")
    yearly(10, 31, "halloween")
    yearly(12, 25, "christmas")
    yearly(12, 31, "new_years_eve")


def _gen_milestones(out, persona, start, end) -> None:
    def milestone(when: date, milestone_type: str, details: str) -> None:
        if start <= when < end:
            begin = _at(when, 11, 0)
            out.add(
                "milestone",
                TimeSpan(begin, begin + timedelta(minutes=30)),
                {"milestone_type": milestone_type, "details": details},
            )

    for job in persona.career:
        milestone(job.start, "new_job", f"Started as {job.role} at {job.company}")
    for study in persona.education:
        milestone(study.start, "new_education", f"Started at {study.institution}")
    for residence in persona.residences:
        milestone(residence.start, "new_residence", f"Moved to {residence.city}")
    for kid in persona.kids:
        milestone(kid.birth_date, "new_kid", f"{kid.name} was born")
    for pet in persona.pets:
        milestone(pet.start, "new_pet", f"{pet.name} the {pet.kind} joined the family")
