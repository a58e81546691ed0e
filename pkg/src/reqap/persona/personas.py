"""Seeded persona sampling: the 30-field biographical questionnaire."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, fields
from datetime import date, timedelta
from typing import Optional

from . import pools


@dataclass(frozen=True)
class Kid:
    name: str
    birth_date: date


@dataclass(frozen=True)
class Pet:
    name: str
    kind: str
    start: date
    end: Optional[date] = None


@dataclass(frozen=True)
class Education:
    institution: str
    city: str
    start: date
    end: date


@dataclass(frozen=True)
class Career:
    company: str
    role: str
    city: str
    start: date
    end: Optional[date] = None


@dataclass(frozen=True)
class Residence:
    city: str
    start: date
    end: Optional[date] = None


@dataclass
class Persona:
    """Biographical and preference fields a question template can draw on."""

    # biography
    name: str = ""
    gender: str = ""
    birth_date: date = date(1990, 1, 1)
    birth_city: str = ""
    mother: str = ""
    father: str = ""
    siblings: list = field(default_factory=list)
    kids: list = field(default_factory=list)
    pets: list = field(default_factory=list)
    friends: list = field(default_factory=list)
    education: list = field(default_factory=list)
    career: list = field(default_factory=list)
    residences: list = field(default_factory=list)
    # preferences
    music_genres: list = field(default_factory=list)
    movie_genres: list = field(default_factory=list)
    tv_genres: list = field(default_factory=list)
    shopping_categories: list = field(default_factory=list)
    travel_regions: list = field(default_factory=list)
    cuisines: list = field(default_factory=list)
    hobbies: list = field(default_factory=list)
    workout_types: list = field(default_factory=list)
    favorite_songs: list = field(default_factory=list)
    favorite_artists: list = field(default_factory=list)
    favorite_movies: list = field(default_factory=list)
    favorite_series: list = field(default_factory=list)
    # average frequencies
    music_per_day: float = 4.0
    movies_per_week: float = 1.0
    tv_episodes_per_week: float = 2.0
    workouts_per_week: float = 2.0
    purchases_per_week: float = 1.0

    def field_values(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _sample(rng: random.Random, pool, k: int) -> list:
    return rng.sample(list(pool), k)


def _date_between(rng: random.Random, start: date, end: date) -> date:
    days = (end - start).days
    return start + timedelta(days=rng.randrange(max(days, 1)))


def generate_persona(seed: int) -> Persona:
    """Deterministically sample all 30 questionnaire fields from the pools."""
    rng = random.Random(f"persona:{seed}")
    first = rng.choice(pools.FIRST_NAMES)
    last = rng.choice(pools.LAST_NAMES)
    gender = rng.choice(("female", "male", "non-binary"))
    birth_date = _date_between(rng, date(1972, 1, 1), date(1995, 12, 31))
    birth_city = rng.choice(pools.CITIES)

    def person_name() -> str:
        return f"{rng.choice(pools.FIRST_NAMES)} {rng.choice(pools.LAST_NAMES)}"

    mother = person_name()
    father = person_name()
    siblings = [person_name() for _ in range(rng.randrange(0, 3))]
    friends = [person_name() for _ in range(rng.randrange(3, 7))]

    kids = []
    for _ in range(rng.randrange(0, 3)):
        offset_years = rng.randrange(18, 36)
        kid_birth = birth_date + timedelta(days=offset_years * 365 + rng.randrange(365))
        kids.append(Kid(name=rng.choice(pools.FIRST_NAMES), birth_date=kid_birth))

    pets = []
    for _ in range(rng.randrange(0, 3)):
        start = _date_between(rng, birth_date + timedelta(days=20 * 365), date(2021, 1, 1))
        pets.append(
            Pet(
                name=rng.choice(pools.PET_NAMES),
                kind=rng.choice(pools.PET_TYPES),
                start=start,
            )
        )

    study_city = rng.choice(pools.CITIES)
    study_start = birth_date + timedelta(days=18 * 365 + rng.randrange(200))
    study_end = study_start + timedelta(days=rng.randrange(3, 6) * 365)
    education = [
        Education(
            institution=rng.choice(pools.UNIVERSITIES),
            city=study_city,
            start=study_start,
            end=study_end,
        )
    ]

    career = []
    job_start = study_end + timedelta(days=rng.randrange(30, 300))
    for i in range(rng.randrange(1, 3)):
        job_end = job_start + timedelta(days=rng.randrange(2, 6) * 365)
        career.append(
            Career(
                company=rng.choice(pools.COMPANIES),
                role=rng.choice(pools.JOB_ROLES),
                city=rng.choice(pools.CITIES),
                start=job_start,
                end=None if i == 0 and rng.random() < 0.5 else job_end,
            )
        )
        job_start = job_end + timedelta(days=rng.randrange(10, 120))
    career.sort(key=lambda c: c.start)

    residences = [Residence(city=birth_city, start=birth_date, end=study_start)]
    residences.append(Residence(city=study_city, start=study_start, end=study_end))
    residences.append(Residence(city=rng.choice(pools.CITIES), start=study_end))

    music_genres = _sample(rng, pools.MUSIC, rng.randrange(2, 4))
    movie_genres = _sample(rng, pools.MOVIES, rng.randrange(2, 4))
    tv_genres = _sample(rng, pools.TV_SERIES, 2)
    shopping_categories = _sample(rng, pools.PRODUCTS, rng.randrange(2, 4))
    travel_regions = _sample(rng, pools.TRAVEL, 2)
    cuisines = _sample(rng, pools.CUISINES, rng.randrange(2, 4))
    hobbies = _sample(rng, pools.HOBBIES, rng.randrange(2, 4))
    workout_types = _sample(rng, pools.WORKOUT_TYPES, rng.randrange(2, 4))

    favorite_songs = []
    favorite_artists = []
    for genre in music_genres:
        title, artists = rng.choice(pools.MUSIC[genre])
        favorite_songs.append(title)
        favorite_artists.append(artists[0])
    favorite_movies = [rng.choice(pools.MOVIES[g]) for g in movie_genres]
    favorite_series = [rng.choice(pools.TV_SERIES[g])[0] for g in tv_genres]

    return Persona(
        name=f"{first} {last}",
        gender=gender,
        birth_date=birth_date,
        birth_city=birth_city,
        mother=mother,
        father=father,
        siblings=siblings,
        kids=kids,
        pets=pets,
        friends=friends,
        education=education,
        career=career,
        residences=residences,
        music_genres=music_genres,
        movie_genres=movie_genres,
        tv_genres=tv_genres,
        shopping_categories=shopping_categories,
        travel_regions=travel_regions,
        cuisines=cuisines,
        hobbies=hobbies,
        workout_types=workout_types,
        favorite_songs=favorite_songs,
        favorite_artists=favorite_artists,
        favorite_movies=favorite_movies,
        favorite_series=favorite_series,
        music_per_day=round(rng.uniform(2.0, 8.0), 1),
        movies_per_week=round(rng.uniform(0.5, 3.0), 1),
        tv_episodes_per_week=round(rng.uniform(1.0, 5.0), 1),
        workouts_per_week=round(rng.uniform(1.0, 4.0), 1),
        purchases_per_week=round(rng.uniform(0.5, 2.5), 1),
    )
