"""Shared fixtures: handmade stores, the counting walk-through, a mini dataset."""

from __future__ import annotations

from datetime import date, datetime

import pytest

from reqap.events import EventStore, make_event
from reqap.values import TimeSpan


def ev(event_id, source, start, end, **attrs):
    return make_event(
        event_id,
        source,
        TimeSpan(datetime.fromisoformat(start), datetime.fromisoformat(end)),
        attrs,
    )


@pytest.fixture(scope="session")
def counting_store():
    """Handmade 15-event store for the how-often-after walk-through.

    Football happenings (after merging redundant captures):
      F1: w1+c1+s1 merge (same match, three sources), ends 2019-05-04 11:30
      F2: w2, ends 2019-05-11 10:30
    Italian meals retrieved and kept by the cuisine filter:
      m1 (2019-05-04 19:00, pizza mail), c2 (2019-05-11 19:00, trattoria),
      c3 (2019-05-01 19:00, pasta night - before both matches)
    Pairs with meal.start >= football.end:
      F1xm1, F1xc2, F2xc2  ->  expected count 3
    """
    events = [
        ev("w1", "workout", "2019-05-04T10:00:00", "2019-05-04T11:30:00",
           workout_type="football", duration=90),
        ev("c1", "calendar", "2019-05-04T10:00:00", "2019-05-04T11:30:00",
           summary="Football match with the team"),
        ev("s1", "social_media", "2019-05-04T11:30:00", "2019-05-04T11:30:00",
           text="Great football game today!"),
        ev("w2", "workout", "2019-05-11T09:00:00", "2019-05-11T10:30:00",
           workout_type="football", duration=90),
        ev("m1", "mail", "2019-05-04T19:00:00", "2019-05-04T19:00:00",
           subject="Dinner tonight",
           body="We fired up the pizza oven after the game, come at 7pm to eat with us"),
        ev("c2", "calendar", "2019-05-11T19:00:00", "2019-05-11T21:00:00",
           summary="Dinner at Trattoria Roma", description="Italian food with friends",
           location="Trattoria Roma"),
        ev("c3", "calendar", "2019-05-01T19:00:00", "2019-05-01T20:30:00",
           summary="Pasta night", description="Italian dinner at home"),
        # distractors
        ev("w3", "workout", "2019-05-06T18:00:00", "2019-05-06T19:00:00",
           workout_type="gym", duration=60),
        ev("mu1", "music_stream", "2019-05-04T20:00:00", "2019-05-04T20:03:00",
           title="Song A", artists=["X"]),
        ev("mu2", "music_stream", "2019-05-05T20:00:00", "2019-05-05T20:03:00",
           title="Song B", artists=["Y"]),
        ev("n1", "note", "2019-05-07T12:00:00", "2019-05-07T12:00:00",
           text="Buy groceries: tomatoes, flour"),
        ev("n2", "note", "2019-05-09T12:00:00", "2019-05-09T12:00:00",
           text="Call the plumber about the sink"),
        ev("tv1", "tvseries_stream", "2019-05-08T21:00:00", "2019-05-08T21:30:00",
           tvseries_title="Harbor Patrol", episode_number=3),
        ev("p1", "online_purchase", "2019-05-03T10:00:00", "2019-05-03T10:00:00",
           product="Trail Running Shoes", price="95.00 EUR"),
        ev("mv1", "movie_stream", "2019-05-10T20:30:00", "2019-05-10T22:30:00",
           movie_title="Cold Static"),
    ]
    assert len(events) == 15
    return EventStore(events)


Q3 = "How often did I eat Italian food after playing football?"

Q3_SCRIPT = {
    Q3: 'APPLY(l=QUD("I ate Italian food after playing football"), fct=len)',
    "I ate Italian food after playing football":
        'JOIN(l1=QUD("I played football with datetime"), '
        'l2=QUD("Italian food I ate with datetime"), '
        'condition="i2.start_datetime >= i1.end_datetime")',
    "I played football with datetime":
        'EXTRACT(l=QUD("I played football"), attr_names=["end_datetime"], '
        "attr_types=[datetime.fromisoformat])",
    "I played football": 'RETRIEVE(query="I played football")',
    "Italian food I ate with datetime":
        'EXTRACT(l=QUD("Italian food I ate"), attr_names=["start_datetime"], '
        "attr_types=[datetime.fromisoformat])",
    "Italian food I ate":
        'FILTER(l=QUD("meals I ate with cuisine"), '
        'filter=lambda attr: attr["cuisine"] == "Italian")',
    "meals I ate with cuisine":
        'EXTRACT(l=QUD("meals I ate"), attr_names=["cuisine"], attr_types=[str])',
    "meals I ate": 'RETRIEVE(query="dinner food pizza pasta restaurant eat")',
}

Q3_EXPECTED_COUNT = 3


@pytest.fixture(scope="session")
def q3_script():
    return dict(Q3_SCRIPT)


@pytest.fixture(scope="session")
def mini_dataset(tmp_path_factory):
    """Generated two-persona dataset shared by persona/bench/acceptance tests."""
    from reqap.persona.dataset import write_dataset
    from reqap.persona.events_gen import GenerationConfig

    out = tmp_path_factory.mktemp("dataset")
    totals = write_dataset(
        out,
        personas=2,
        seed=1,
        start=date(2021, 1, 1),
        end=date(2023, 1, 1),
        clock=datetime(2023, 1, 1),
        config=GenerationConfig(music_per_day=3.0),
    )
    return out, totals
