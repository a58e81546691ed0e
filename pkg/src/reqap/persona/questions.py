"""Question instantiation: templates, scripted decompositions, oracle gold answers.

Each template fills its slots from the persona, carries a scripted
decomposition (so the engine answers it through the same recursive protocol
it would use with a live generator), and names a canonical selector per
retrieval query. The gold answer comes from executing the very same plan over
the canonical store with direct selector-backed retrieval; the selector's
canonical ids also yield the gold observable labels the oracle classifiers
and the retrieval-recall tests use. Instances whose gold is empty (or a zero
count) are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from typing import Optional

from ..decompose import ScriptedDecomposer, resolve
from ..engine import ExecError, RetrievalBundle, execute, make_context
from ..events import EventStore
from ..values import Value
from .personas import Persona
from .verbalize import build_canonical_store


class NoValidFillingError(Exception):
    pass


@dataclass
class QuestionInstance:
    question: str
    script: dict
    retrieve_gold: dict  # retrieval query -> tuple of gold observable ids
    gold: Value
    tags: frozenset
    structured_only: bool
    template: str
    persona_id: str = ""


@dataclass
class _Builder:
    persona: Persona
    canonicals: list
    canonical_store: EventStore
    observable_ids: dict  # canonical id -> tuple of observable ids
    clock: datetime
    persona_id: str
    instances: list = field(default_factory=list)

    def by_type(self, event_type: str) -> list:
        return [c for c in self.canonicals if c.event_type == event_type]

    def years(self) -> list:
        seen = sorted({c.span.start.year for c in self.canonicals})
        return seen

    def add(
        self,
        template: str,
        question: str,
        script: dict,
        selectors: dict,
        tags,
        structured_only: bool,
    ) -> None:
        """Evaluate the instance's gold; keep it only when non-empty."""
        direct = {}
        retrieve_gold = {}
        for query, selected in selectors.items():
            direct[query] = tuple(
                self.canonical_store.get(c.ce_id) for c in selected
            )
            gold_ids: list = []
            for canonical in selected:
                gold_ids.extend(self.observable_ids.get(canonical.ce_id, ()))
            retrieve_gold[query] = tuple(sorted(gold_ids))
        try:
            plan = resolve(question, ScriptedDecomposer(script))
            ctx = make_context(
                self.canonical_store,
                clock=self.clock,
                retrieval=RetrievalBundle(direct=direct),
            )
            result = execute(plan, ctx)
        except ExecError:
            return
        gold = result.value
        if gold is None or gold == 0 or gold == "" or gold == []:
            return
        self.instances.append(
            QuestionInstance(
                question=question,
                script=script,
                retrieve_gold=retrieve_gold,
                gold=gold,
                tags=frozenset(tags),
                structured_only=structured_only,
                template=template,
                persona_id=self.persona_id,
            )
        )


# ---------------------------------------------------------------------------
# Retrieval queries shared between templates and probes
# ---------------------------------------------------------------------------

Q_MUSIC = "music song stream"
Q_MOVIES = "movie stream watched"
Q_TV = "episode season stream"
Q_PURCHASES = "online purchase order"
Q_MEETINGS = "lunch coffee dinner picnic meetup"
Q_DOCTOR = "appointment dentist gp checkup"
Q_TRIPS = "trip holiday"
Q_NEW_JOB = "started new job"


def _workouts_query(sport: str) -> str:
    return f"{sport} workout session"


# ---------------------------------------------------------------------------
# Templates
# ---------------------------------------------------------------------------


def _t_workout_count(b: _Builder) -> None:
    workouts = b.by_type("workout")
    for sport in b.persona.workout_types:
        selected = [c for c in workouts if c.attrs["workout_type"] == sport]
        question = f"How many {sport} workouts did I do?"
        sub = f"my {sport} workouts"
        b.add(
            "workout_count",
            question,
            {
                question: f'APPLY(l=QUD("{sub}"), fct=len)',
                sub: f'RETRIEVE(query="{_workouts_query(sport)}")',
            },
            {_workouts_query(sport): selected},
            {"aggregation"},
            structured_only=True,
        )


_MONTH_NAMES = (
    "January", "February", "March", "April", "May", "June",
    "July", "August", "September", "October", "November", "December",
)


def _t_purchase_sum_month(b: _Builder) -> None:
    purchases = b.by_type("online_purchase")
    months = sorted({(c.span.start.year, c.span.start.month) for c in purchases})
    for year, month in months[:6]:
        month_name = _MONTH_NAMES[month - 1]
        question = f"How much money did I spend on online purchases in {month_name} {year}?"
        sub1 = f"my online purchases in {month_name} {year} with amounts"
        sub2 = f"my online purchases in {month_name} {year}"
        sub3 = "my online purchases with date"
        sub4 = "my online purchases"
        b.add(
            "purchase_sum_month",
            question,
            {
                question: f'SUM(l=QUD("{sub1}"), attr_name="amount_spent")',
                sub1: f'EXTRACT(l=QUD("{sub2}"), attr_names=["amount_spent"], attr_types=[float])',
                sub2: (
                    f'FILTER(l=QUD("{sub3}"), filter=lambda attr: '
                    f'attr["purchase_date"].year == {year} and attr["purchase_date"].month == {month})'
                ),
                sub3: f'EXTRACT(l=QUD("{sub4}"), attr_names=["purchase_date"], attr_types=[date.fromisoformat])',
                sub4: f'RETRIEVE(query="{Q_PURCHASES}")',
            },
            {Q_PURCHASES: purchases},
            {"aggregation", "temporal"},
            structured_only=True,
        )


def _t_most_listened_artist(b: _Builder) -> None:
    music = b.by_type("music_stream")
    question = "Which artist did I listen to the most?"
    sub1 = "number of songs grouped by artist"
    sub2 = "songs grouped by artist"
    sub3 = "songs with artist"
    sub4 = "songs with artist names"
    sub5 = "songs I listened to"
    b.add(
        "most_listened_artist",
        question,
        {
            question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="count", val_attr_name="artist")',
            sub1: f'MAP(l=QUD("{sub2}"), fct=len, res_name="count")',
            sub2: f'GROUP_BY(l=QUD("{sub3}"), attr_names=["artist"])',
            sub3: f'UNNEST(l=QUD("{sub4}"), nested_attr_name="artist_names", unnested_attr_name="artist")',
            sub4: f'EXTRACT(l=QUD("{sub5}"), attr_names=["artist_names"], attr_types=[list])',
            sub5: f'RETRIEVE(query="{Q_MUSIC}")',
        },
        {Q_MUSIC: music},
        {"grouping", "ordering"},
        structured_only=True,
    )


def _t_most_listened_song_year(b: _Builder) -> None:
    music = b.by_type("music_stream")
    for year in b.years()[:2]:
        question = f"Which song did I listen to the most in {year}?"
        sub1 = f"number of plays per song in {year}"
        sub2 = f"songs in {year} grouped by title"
        sub3 = f"songs I listened to in {year} with title"
        sub4 = "songs with title"
        sub5 = "songs I listened to"
        b.add(
            "most_listened_song_year",
            question,
            {
                question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="count", val_attr_name="title")',
                sub1: f'MAP(l=QUD("{sub2}"), fct=len, res_name="count")',
                sub2: f'GROUP_BY(l=QUD("{sub3}"), attr_names=["title"])',
                sub3: f'FILTER(l=QUD("{sub4}"), filter=lambda attr: attr["start_date"].year == {year})',
                sub4: f'EXTRACT(l=QUD("{sub5}"), attr_names=["title"], attr_types=[str])',
                sub5: f'RETRIEVE(query="{Q_MUSIC}")',
            },
            {Q_MUSIC: music},
            {"grouping", "ordering", "temporal"},
            structured_only=True,
        )


_PLACE_KINDS = ("park", "restaurant", "cafe")


def _t_meet_friend_at_place(b: _Builder) -> None:
    meetings = b.by_type("meeting")
    for friend in b.persona.friends[:3]:
        for kind in _PLACE_KINDS:
            question = f"How many times did I meet with {friend} at a {kind}?"
            sub1 = f"I met with {friend} at a {kind}"
            sub2 = f"I met with {friend} with location"
            sub3 = f"I met with {friend}"
            sub4 = "my meetups with participants"
            sub5 = "my meetups"
            b.add(
                "meet_friend_at_place",
                question,
                {
                    question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                    sub1: (
                        f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                        f'"{kind}" in attr["location"].lower())'
                    ),
                    sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["location"], attr_types=[str])',
                    sub3: (
                        f'FILTER(l=QUD("{sub4}"), filter=lambda attr: '
                        f'any("{friend.lower()}" in p.lower() for p in attr["participants"]))'
                    ),
                    sub4: f'EXTRACT(l=QUD("{sub5}"), attr_names=["participants"], attr_types=[list])',
                    sub5: f'RETRIEVE(query="{Q_MEETINGS}")',
                },
                {Q_MEETINGS: meetings},
                {"aggregation", "multi-source"},
                structured_only=False,
            )


def _t_earliest_doctor(b: _Builder) -> None:
    doctors = b.by_type("doctor_appointment")
    question = "Which doctor's appointment was the earliest in the day?"
    sub1 = "my doctor's appointments with start time"
    sub2 = "my doctor's appointments"
    b.add(
        "earliest_doctor",
        question,
        {
            question: (
                f'ARGMIN(l=QUD("{sub1}"), arg_attr_name="start_time", '
                f'val_attr_name="appointment_details")'
            ),
            sub1: (
                f'EXTRACT(l=QUD("{sub2}"), attr_names=["start_time", "appointment_details"], '
                f"attr_types=[time.fromisoformat, str])"
            ),
            sub2: f'RETRIEVE(query="{Q_DOCTOR}")',
        },
        {Q_DOCTOR: doctors},
        {"ordering", "multi-source"},
        structured_only=False,
    )


def _t_workouts_hr(b: _Builder) -> None:
    workouts = b.by_type("workout")
    for year in b.years()[:2]:
        for threshold in (160, 175):
            question = (
                f"How many workouts did I do in {year} with a maximum heart rate "
                f"of more than {threshold}?"
            )
            sub1 = f"workouts in {year} with max heart rate above {threshold}"
            sub2 = "my workouts with heart rate"
            sub3 = "all my workouts"
            b.add(
                "workouts_hr",
                question,
                {
                    question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                    sub1: (
                        f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                        f'attr["start_date"].year == {year} and '
                        f'attr["maximum_heart_rate"] > {threshold})'
                    ),
                    sub2: (
                        f'EXTRACT(l=QUD("{sub3}"), attr_names=["maximum_heart_rate"], '
                        f"attr_types=[int])"
                    ),
                    sub3: 'RETRIEVE(query="workout session heart rate")',
                },
                {"workout session heart rate": workouts},
                {"aggregation", "temporal"},
                structured_only=True,
            )


def _t_run_distance(b: _Builder) -> None:
    if "running" not in b.persona.workout_types:
        return
    runs = [c for c in b.by_type("workout") if c.attrs["workout_type"] == "running"]
    for year in b.years()[:2]:
        question = f"How many kilometers did I run in {year}?"
        sub1 = f"my runs in {year} with distance"
        sub2 = f"my runs in {year}"
        sub3 = "my running workouts"
        b.add(
            "run_distance",
            question,
            {
                question: f'SUM(l=QUD("{sub1}"), attr_name="distance_km")',
                sub1: f'EXTRACT(l=QUD("{sub2}"), attr_names=["distance_km"], attr_types=[float])',
                sub2: (
                    f'FILTER(l=QUD("{sub3}"), filter=lambda attr: '
                    f'attr["start_date"].year == {year})'
                ),
                sub3: f'RETRIEVE(query="{_workouts_query("running")}")',
            },
            {_workouts_query("running"): runs},
            {"aggregation", "temporal"},
            structured_only=True,
        )


def _t_songs_after_workout(b: _Builder) -> None:
    music = b.by_type("music_stream")
    workouts = b.by_type("workout")
    for sport in b.persona.workout_types[:2]:
        selected = [c for c in workouts if c.attrs["workout_type"] == sport]
        question = f"How many songs did I listen to right after a {sport} workout?"
        sub1 = f"songs right after my {sport} workouts"
        sub2 = "songs I listened to"
        sub3 = f"my {sport} workouts"
        b.add(
            "songs_after_workout",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'JOIN(l1=QUD("{sub2}"), l2=QUD("{sub3}"), '
                    f'condition="i1.start_datetime >= i2.end_datetime '
                    f'and i1.start_date == i2.end_date")'
                ),
                sub2: f'RETRIEVE(query="{Q_MUSIC}")',
                sub3: f'RETRIEVE(query="{_workouts_query(sport)}")',
            },
            {Q_MUSIC: music, _workouts_query(sport): selected},
            {"join", "aggregation", "temporal"},
            structured_only=True,
        )


def _t_different_movies(b: _Builder) -> None:
    movies = b.by_type("movie_stream")
    question = "How many different movies did I watch?"
    sub1 = "my watched movies grouped by title"
    sub2 = "movies I watched with title"
    sub3 = "movies I watched"
    b.add(
        "different_movies",
        question,
        {
            question: f'APPLY(l=QUD("{sub1}"), fct=len)',
            sub1: f'GROUP_BY(l=QUD("{sub2}"), attr_names=["movie_title"])',
            sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["movie_title"], attr_types=[str])',
            sub3: f'RETRIEVE(query="{Q_MOVIES}")',
        },
        {Q_MOVIES: movies},
        {"grouping", "aggregation"},
        structured_only=True,
    )


def _t_busiest_music_day(b: _Builder) -> None:
    music = b.by_type("music_stream")
    question = "On which day did I listen to music the most?"
    sub1 = "number of songs I listened per day"
    sub2 = "my songs grouped by day"
    sub3 = "songs I listened to with date"
    sub4 = "songs I listened to"
    b.add(
        "busiest_music_day",
        question,
        {
            question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="num_songs", val_attr_name="start_date")',
            sub1: f'MAP(l=QUD("{sub2}"), fct=len, res_name="num_songs")',
            sub2: f'GROUP_BY(l=QUD("{sub3}"), attr_names=["start_date"])',
            sub3: f'EXTRACT(l=QUD("{sub4}"), attr_names=["start_date"], attr_types=[date.fromisoformat])',
            sub4: f'RETRIEVE(query="{Q_MUSIC}")',
        },
        {Q_MUSIC: music},
        {"grouping", "ordering"},
        structured_only=True,
    )


def _t_doctor_recent(b: _Builder) -> None:
    doctors = b.by_type("doctor_appointment")
    for years_back in (1, 2, 3):
        question = f"How many times did I visit the doctor in the last {years_back} years?"
        sub1 = f"doctor visits in the last {years_back} years"
        sub2 = "my doctor appointments"
        b.add(
            "doctor_recent",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["start_date"] >= (date.today() - relativedelta(years={years_back})))'
                ),
                sub2: f'RETRIEVE(query="{Q_DOCTOR}")',
            },
            {Q_DOCTOR: doctors},
            {"aggregation", "temporal", "multi-source"},
            structured_only=False,
        )


def _t_most_expensive_purchase(b: _Builder) -> None:
    purchases = b.by_type("online_purchase")
    question = "What was the most expensive purchase I made?"
    sub1 = "my purchases with price and product"
    sub2 = "my online purchases"
    b.add(
        "most_expensive_purchase",
        question,
        {
            question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="amount_spent", val_attr_name="product")',
            sub1: (
                f'EXTRACT(l=QUD("{sub2}"), attr_names=["amount_spent", "product"], '
                f"attr_types=[float, str])"
            ),
            sub2: f'RETRIEVE(query="{Q_PURCHASES}")',
        },
        {Q_PURCHASES: purchases},
        {"ordering"},
        structured_only=True,
    )


def _t_shortest_trip(b: _Builder) -> None:
    trips = b.by_type("travel")
    question = "Which of my trips was the shortest?"
    sub1 = "my trips with length in days"
    sub2 = "my trips with destination"
    sub3 = "my trips"
    b.add(
        "shortest_trip",
        question,
        {
            question: f'ARGMIN(l=QUD("{sub1}"), arg_attr_name="trip_days", val_attr_name="destination")',
            sub1: f'MAP(l=QUD("{sub2}"), fct=date_diff_days, res_name="trip_days")',
            sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["destination"], attr_types=[str])',
            sub3: f'RETRIEVE(query="{Q_TRIPS}")',
        },
        {Q_TRIPS: trips},
        {"ordering", "multi-source"},
        structured_only=False,
    )


def _t_doctor_weekday(b: _Builder) -> None:
    doctors = b.by_type("doctor_appointment")
    question = "On which day of the week do I usually see the doctor?"
    sub1 = "doctor visits grouped by weekday with counts"
    sub2 = "doctor visits grouped by weekday"
    sub3 = "doctor visits with weekday"
    sub4 = "my doctor appointments"
    b.add(
        "doctor_weekday",
        question,
        {
            question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="count", val_attr_name="weekday")',
            sub1: f'MAP(l=QUD("{sub2}"), fct=len, res_name="count")',
            sub2: f'GROUP_BY(l=QUD("{sub3}"), attr_names=["weekday"])',
            sub3: f'MAP(l=QUD("{sub4}"), fct=weekday, res_name="weekday")',
            sub4: f'RETRIEVE(query="{Q_DOCTOR}")',
        },
        {Q_DOCTOR: doctors},
        {"grouping", "ordering", "multi-source"},
        structured_only=False,
    )


def _t_park_meetups_year(b: _Builder) -> None:
    meetings = b.by_type("meeting")
    for year in b.years()[:2]:
        question = f"How many times did I meet someone at a park in {year}?"
        sub1 = f"park meetups in {year}"
        sub2 = "my meetups with location"
        sub3 = "my meetups"
        b.add(
            "park_meetups_year",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'"park" in attr["location"].lower() and attr["start_date"].year == {year})'
                ),
                sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["location"], attr_types=[str])',
                sub3: f'RETRIEVE(query="{Q_MEETINGS}")',
            },
            {Q_MEETINGS: meetings},
            {"aggregation", "temporal", "multi-source"},
            structured_only=False,
        )


def _t_first_workout_after_job(b: _Builder) -> None:
    milestones = [
        c for c in b.by_type("milestone") if c.attrs["milestone_type"] == "new_job"
    ]
    workouts = b.by_type("workout")
    for sport in b.persona.workout_types[:2]:
        selected = [c for c in workouts if c.attrs["workout_type"] == sport]
        question = f"When was my first {sport} workout after I started my first job?"
        sub1 = f"{sport} workouts after starting my first job"
        sub2 = f"my {sport} workouts"
        sub3 = "datetime I started my first job"
        sub4 = "my new job milestones"
        b.add(
            "first_workout_after_job",
            question,
            {
                question: f'MIN(l=QUD("{sub1}"), attr_name="start_datetime")',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["start_datetime"] >= QUD("{sub3}").result)'
                ),
                sub2: f'RETRIEVE(query="{_workouts_query(sport)}")',
                sub3: f'MIN(l=QUD("{sub4}"), attr_name="start_datetime")',
                sub4: f'RETRIEVE(query="{Q_NEW_JOB}")',
            },
            {_workouts_query(sport): selected, Q_NEW_JOB: milestones},
            {"temporal", "ordering", "multi-source"},
            structured_only=False,
        )


def _t_movies_year(b: _Builder) -> None:
    movies = b.by_type("movie_stream")
    for year in b.years()[:2]:
        question = f"How many movies did I watch in {year}?"
        sub1 = f"movies I watched in {year}"
        sub2 = "movies I watched"
        b.add(
            "movies_year",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["start_date"].year == {year})'
                ),
                sub2: f'RETRIEVE(query="{Q_MOVIES}")',
            },
            {Q_MOVIES: movies},
            {"aggregation", "temporal"},
            structured_only=True,
        )


def _t_category_purchases(b: _Builder) -> None:
    purchases = b.by_type("online_purchase")
    for category in b.persona.shopping_categories[:3]:
        question = f"How many purchases did I make in the {category} category?"
        sub1 = f"my {category} purchases"
        sub2 = "my purchases with category"
        sub3 = "my online purchases"
        b.add(
            "category_purchases",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["category"] == "{category}")'
                ),
                sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["category"], attr_types=[str])',
                sub3: f'RETRIEVE(query="{Q_PURCHASES}")',
            },
            {Q_PURCHASES: purchases},
            {"aggregation", "grouping"},
            structured_only=True,
        )


def _t_series_episodes(b: _Builder) -> None:
    episodes = b.by_type("tvseries_stream")
    series_names = sorted({c.attrs["tvseries_title"] for c in episodes})
    for series in series_names[:3]:
        question = f"How many episodes of {series} did I watch?"
        sub1 = f"episodes of {series}"
        sub2 = "my tv episodes with title"
        sub3 = "my tv episodes"
        b.add(
            "series_episodes",
            question,
            {
                question: f'APPLY(l=QUD("{sub1}"), fct=len)',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["tvseries_title"] == "{series}")'
                ),
                sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["tvseries_title"], attr_types=[str])',
                sub3: f'RETRIEVE(query="{Q_TV}")',
            },
            {Q_TV: episodes},
            {"aggregation"},
            structured_only=True,
        )


def _t_avg_workout_duration(b: _Builder) -> None:
    workouts = b.by_type("workout")
    for sport in b.persona.workout_types[:2]:
        selected = [c for c in workouts if c.attrs["workout_type"] == sport]
        question = f"What was my average {sport} workout duration in minutes?"
        sub1 = f"my {sport} workouts with duration"
        sub2 = f"my {sport} workouts"
        b.add(
            "avg_workout_duration",
            question,
            {
                question: f'AVG(l=QUD("{sub1}"), attr_name="duration")',
                sub1: f'EXTRACT(l=QUD("{sub2}"), attr_names=["duration"], attr_types=[int])',
                sub2: f'RETRIEVE(query="{_workouts_query(sport)}")',
            },
            {_workouts_query(sport): selected},
            {"aggregation"},
            structured_only=True,
        )


def _t_last_purchase(b: _Builder) -> None:
    purchases = b.by_type("online_purchase")
    question = "What was the last product I bought online?"
    sub1 = "my purchases with product"
    sub2 = "my online purchases"
    b.add(
        "last_purchase",
        question,
        {
            question: f'ARGMAX(l=QUD("{sub1}"), arg_attr_name="start_datetime", val_attr_name="product")',
            sub1: f'EXTRACT(l=QUD("{sub2}"), attr_names=["product"], attr_types=[str])',
            sub2: f'RETRIEVE(query="{Q_PURCHASES}")',
        },
        {Q_PURCHASES: purchases},
        {"ordering", "temporal"},
        structured_only=True,
    )


def _t_max_heart_rate(b: _Builder) -> None:
    workouts = b.by_type("workout")
    question = "What is the highest heart rate I reached during a workout?"
    sub1 = "my workouts with max heart rate"
    sub2 = "all my workouts"
    b.add(
        "max_heart_rate",
        question,
        {
            question: f'MAX(l=QUD("{sub1}"), attr_name="maximum_heart_rate")',
            sub1: f'EXTRACT(l=QUD("{sub2}"), attr_names=["maximum_heart_rate"], attr_types=[int])',
            sub2: 'RETRIEVE(query="workout session heart rate")',
        },
        {"workout session heart rate": workouts},
        {"aggregation", "ordering"},
        structured_only=True,
    )


def _t_christmas_count(b: _Builder) -> None:
    parties = [
        c for c in b.by_type("anniversary") if c.attrs["anniversary_type"] == "christmas"
    ]
    question = "How many times did I celebrate Christmas?"
    sub1 = "my christmas celebrations"
    b.add(
        "christmas_count",
        question,
        {
            question: f'APPLY(l=QUD("{sub1}"), fct=len)',
            sub1: 'RETRIEVE(query="christmas")',
        },
        {"christmas": parties},
        {"aggregation", "multi-source"},
        structured_only=False,
    )


def _t_cheapest_purchase_year(b: _Builder) -> None:
    purchases = b.by_type("online_purchase")
    for year in b.years()[:2]:
        question = f"What was the price of the cheapest purchase I made in {year}?"
        sub1 = f"purchase amounts in {year}"
        sub2 = f"my purchases in {year} with amount"
        sub3 = "my online purchases"
        b.add(
            "cheapest_purchase_year",
            question,
            {
                question: f'MIN(l=QUD("{sub1}"), attr_name="amount_spent")',
                sub1: (
                    f'FILTER(l=QUD("{sub2}"), filter=lambda attr: '
                    f'attr["start_date"].year == {year})'
                ),
                sub2: f'EXTRACT(l=QUD("{sub3}"), attr_names=["amount_spent"], attr_types=[float])',
                sub3: f'RETRIEVE(query="{Q_PURCHASES}")',
            },
            {Q_PURCHASES: purchases},
            {"aggregation", "temporal", "ordering"},
            structured_only=True,
        )


TEMPLATES: tuple = (
    _t_workout_count,
    _t_purchase_sum_month,
    _t_most_listened_artist,
    _t_most_listened_song_year,
    _t_meet_friend_at_place,
    _t_earliest_doctor,
    _t_workouts_hr,
    _t_run_distance,
    _t_songs_after_workout,
    _t_different_movies,
    _t_busiest_music_day,
    _t_doctor_recent,
    _t_most_expensive_purchase,
    _t_shortest_trip,
    _t_doctor_weekday,
    _t_park_meetups_year,
    _t_first_workout_after_job,
    _t_movies_year,
    _t_category_purchases,
    _t_series_episodes,
    _t_avg_workout_duration,
    _t_last_purchase,
    _t_max_heart_rate,
    _t_christmas_count,
    _t_cheapest_purchase_year,
)

TEMPLATE_NAMES = tuple(t.__name__.removeprefix("_t_") for t in TEMPLATES)


def instantiate_questions(
    persona: Persona,
    canonicals: list,
    linkage: dict,
    clock: datetime,
    persona_id: str = "",
    templates: Optional[tuple] = None,
) -> list:
    """All question instances for one persona's canonical events."""
    observable_ids: dict[str, list] = {}
    for obs_id, ce_id in linkage.items():
        observable_ids.setdefault(ce_id, []).append(obs_id)
    builder = _Builder(
        persona=persona,
        canonicals=list(canonicals),
        canonical_store=build_canonical_store(canonicals),
        observable_ids={k: tuple(sorted(v)) for k, v in observable_ids.items()},
        clock=clock,
        persona_id=persona_id,
    )
    for template in templates or TEMPLATES:
        template(builder)
    return builder.instances


def retrieval_probes(persona: Persona, canonicals: list, linkage: dict) -> list:
    """Standalone (query, gold observable ids) pairs beyond the question set.

    Probes cover the distinctive values of each event type so retrieval can be
    measured on many more sub-queries than the question instances alone carry.
    """
    observable_ids: dict[str, list] = {}
    for obs_id, ce_id in linkage.items():
        observable_ids.setdefault(ce_id, []).append(obs_id)

    def gold(selected) -> tuple:
        ids: list = []
        for canonical in selected:
            ids.extend(observable_ids.get(canonical.ce_id, ()))
        return tuple(sorted(ids))

    probes: list = []

    def probe(query: str, selected) -> None:
        selected = list(selected)
        if selected:
            probes.append((query, gold(selected)))

    by_type: dict[str, list] = {}
    for canonical in canonicals:
        by_type.setdefault(canonical.event_type, []).append(canonical)

    for sport in sorted({c.attrs["workout_type"] for c in by_type.get("workout", [])}):
        probe(
            f"{sport} workout session",
            (c for c in by_type["workout"] if c.attrs["workout_type"] == sport),
        )
    music = by_type.get("music_stream", [])
    for title in sorted({c.attrs["title"] for c in music}):
        probe(f"the song {title}", (c for c in music if c.attrs["title"] == title))
    artists = sorted({a for c in music for a in c.attrs["artists"]})
    for artist in artists:
        probe(f"songs by {artist}", (c for c in music if artist in c.attrs["artists"]))
    movies = by_type.get("movie_stream", [])
    for title in sorted({c.attrs["movie_title"] for c in movies}):
        probe(
            f"the movie {title}", (c for c in movies if c.attrs["movie_title"] == title)
        )
    episodes = by_type.get("tvseries_stream", [])
    for series in sorted({c.attrs["tvseries_title"] for c in episodes}):
        probe(
            f"episodes of {series}",
            (c for c in episodes if c.attrs["tvseries_title"] == series),
        )
    purchases = by_type.get("online_purchase", [])
    for category in sorted({c.attrs["category"] for c in purchases}):
        probe(
            f"{category} purchase",
            (c for c in purchases if c.attrs["category"] == category),
        )
    for product in sorted({c.attrs["product"] for c in purchases}):
        probe(
            f"order of {product}",
            (c for c in purchases if c.attrs["product"] == product),
        )
    meetings = by_type.get("meeting", [])
    for cuisine in sorted({c.attrs["cuisine"] for c in meetings if "cuisine" in c.attrs}):
        probe(
            f"{cuisine} food",
            (c for c in meetings if c.attrs.get("cuisine") == cuisine),
        )
    doctors = by_type.get("doctor_appointment", [])
    for doctor_type in sorted({c.attrs["doctor_type"] for c in doctors}):
        probe(
            f"{doctor_type} appointment",
            (c for c in doctors if c.attrs["doctor_type"] == doctor_type),
        )
    trips = by_type.get("travel", [])
    for destination in sorted({c.attrs["destination"] for c in trips}):
        probe(
            f"trip to {destination}",
            (c for c in trips if c.attrs["destination"] == destination),
        )
    return probes
