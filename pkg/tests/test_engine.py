import random
from datetime import date, datetime, time, timedelta
from fractions import Fraction

import pytest

from reqap.engine import (
    EmptyAggregateError,
    ExecContext,
    ExtractionBundle,
    FunctionDomainError,
    NonNumericError,
    PredicateTypeError,
    RetrievalBundle,
    TypeMismatchError,
    aggregate,
    arg_extremum,
    apply_result,
    execute,
    filter_events,
    group_by,
    join,
    make_context,
    map_result,
    unnest,
    ExecutionResult,
)
from reqap.events import EventStore, make_event
from reqap.extraction import RuleBasedGenerator
from reqap.plan import parse_plan
from reqap.plan.nodes import FnExpr
from reqap.plan.parser import parse_condition
from reqap.decompose import ScriptedDecomposer, resolve
from reqap.values import TimeSpan

from conftest import Q3, Q3_EXPECTED_COUNT, ev


def _ctx(store=None):
    store = store or EventStore([ev("z", "note", "2020-01-01T00:00:00", "2020-01-01T00:00:00")])
    return make_context(store, clock=datetime(2025, 6, 1))


def _events(values, key="v", source="note", day_step=1):
    out = []
    base = datetime(2020, 1, 1, 8)
    for i, value in enumerate(values):
        start = base + timedelta(days=i * day_step)
        attrs = {} if value is None else {key: value}
        out.append(ev(f"e{i:03d}", source, start.isoformat(),
                      (start + timedelta(hours=1)).isoformat(), **attrs))
    return out


# ---------------------------------------------------------------------------
# join
# ---------------------------------------------------------------------------


def test_join_overlap_condition_hand_checked():
    left = [
        ev("l0", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00"),
        ev("l1", "calendar", "2020-01-02T10:00:00", "2020-01-02T11:00:00"),
    ]
    right = [
        ev("r0", "mail", "2020-01-01T10:30:00", "2020-01-01T12:00:00"),
        ev("r1", "mail", "2020-01-03T10:00:00", "2020-01-03T11:00:00"),
    ]
    condition = parse_condition(
        "i1.start_datetime <= i2.end_datetime and i2.start_datetime <= i1.end_datetime"
    )
    pairs = join(left, right, condition, _ctx())
    assert [sorted(e.provenance) for e in pairs] == [["l0", "r0"]]


def test_join_empty_side():
    condition = parse_condition("i1.start_datetime >= i2.end_datetime")
    assert join([], _events([1, 2]), condition, _ctx()) == []


def test_join_attr_suffix_and_span():
    left = [ev("l", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00", k="lv", only="x")]
    right = [ev("r", "mail", "2020-01-01T10:30:00", "2020-01-01T12:00:00", k="rv")]
    condition = parse_condition("i1.start_datetime <= i2.end_datetime")
    combined = join(left, right, condition, _ctx())[0]
    assert combined.attrs["k"] == "lv"
    assert combined.attrs["k__r"] == "rv"
    assert combined.attrs["only"] == "x"
    assert combined.span.start == datetime(2020, 1, 1, 10)
    assert combined.span.end == datetime(2020, 1, 1, 12)


def _random_event_list(rng, n, side):
    events = []
    base = datetime(2020, 1, 1)
    for i in range(n):
        start = base + timedelta(minutes=rng.randrange(0, 5000))
        end = start + timedelta(minutes=rng.randrange(0, 240))
        attrs = {"num": rng.randrange(0, 40)}
        if rng.random() < 0.15:
            attrs.pop("num")  # null key on some events
        events.append(ev(f"{side}{i:03d}", "note", start.isoformat(), end.isoformat(), **attrs))
    return events


_JOIN_CONDITIONS = (
    "i1.start_datetime <= i2.end_datetime and i2.start_datetime <= i1.end_datetime",
    "i1.start_datetime >= i2.end_datetime",
    "i1.end_datetime < i2.start_datetime",
    "i1.num == i2.num",
    "i1.num <= i2.num and i1.start_datetime <= i2.start_datetime",
    "i1.start_date == i2.start_date and i1.num > i2.num",
)


def test_join_matches_nested_loop_oracle_randomized():
    """Sort-merge band join vs brute force, 1,000+ randomized instances."""
    from reqap.engine import eval_pred, _PredScope

    from reqap.engine import UnknownKeyInConditionError
    from reqap.plan.nodes import attr_keys_in_pred
    from reqap.events import BUILTIN_KEYS

    rng = random.Random(31337)
    checked = 0
    for round_number in range(1000):
        condition = parse_condition(rng.choice(_JOIN_CONDITIONS))
        left = _random_event_list(rng, rng.randrange(0, 14), "L")
        right = _random_event_list(rng, rng.randrange(0, 14), "R")
        ctx = _ctx()
        try:
            got = join(left, right, condition, ctx)
        except UnknownKeyInConditionError:
            # contract: raised only when a non-builtin key is on no event of its side
            sides = {"i1": left, "i2": right}
            assert any(
                ref.key not in BUILTIN_KEYS
                and sides[ref.side]
                and not any(e.has(ref.key) for e in sides[ref.side])
                for ref in attr_keys_in_pred(condition)
            )
            checked += 1
            continue
        scope = _PredScope(ctx)
        expected = []
        for levent in left:
            for revent in right:
                if eval_pred(condition, {"i1": levent, "i2": revent}, scope):
                    expected.append((levent.id, revent.id))
        got_pairs = sorted(tuple(sorted(e.provenance)) for e in got)
        expected_pairs = sorted(tuple(sorted(p)) for p in expected)
        assert got_pairs == expected_pairs
        checked += 1
    assert checked == 1000


def test_join_larger_random_instance_band_path():
    rng = random.Random(5)
    left = _random_event_list(rng, 30, "L")
    right = _random_event_list(rng, 30, "R")
    condition = parse_condition(
        "i1.start_datetime <= i2.end_datetime and i2.start_datetime <= i1.end_datetime"
    )
    got = {tuple(sorted(e.provenance)) for e in join(left, right, condition, _ctx())}
    expected = {
        (min(a.id, b.id), max(a.id, b.id))
        for a in left
        for b in right
        if a.span.overlaps(b.span)
    }
    assert got == expected


# ---------------------------------------------------------------------------
# group_by
# ---------------------------------------------------------------------------


def test_group_by_hand_example():
    events = _events(["d1", "d1", "d2", "d2"], key="tag")
    groups = group_by(events, ["tag"])
    assert [len(g.members) for g in groups] == [2, 2]
    assert [g.key_values["tag"] for g in groups] == ["d1", "d2"]


def test_group_by_month_and_year():
    events = [
        ev("a", "note", "2021-01-05T10:00:00", "2021-01-05T10:00:00"),
        ev("b", "note", "2022-01-07T10:00:00", "2022-01-07T10:00:00"),
    ]
    mapped = map_result(ExecutionResult.from_events(events), FnExpr("month"), "month")
    mapped = map_result(mapped, FnExpr("year"), "year")
    groups = group_by(mapped.events, ["month", "year"])
    assert len(groups) == 2  # January 2021 and January 2022 stay distinct


def test_group_by_matches_naive_partition_randomized():
    rng = random.Random(77)
    for _ in range(1000):
        events = _events(
            [rng.choice(("a", "b", "c", None)) for _ in range(rng.randrange(0, 20))],
            key="tag",
        )
        groups = group_by(events, ["tag"])
        # disjoint cover in first-appearance order with shared key values
        seen = []
        naive = {}
        order = []
        for event in events:
            value = event.get("tag")
            if value not in naive:
                naive[value] = []
                order.append(value)
            naive[value].append(event.id)
        assert [g.key_values["tag"] for g in groups] == order
        for group in groups:
            assert [m.id for m in group.members] == naive[group.key_values["tag"]]
            seen.extend(m.id for m in group.members)
        assert sorted(seen) == sorted(e.id for e in events)


# ---------------------------------------------------------------------------
# filter
# ---------------------------------------------------------------------------


def test_filter_month_year():
    events = [
        ev("a", "online_purchase", "2022-03-10T10:00:00", "2022-03-10T10:00:00"),
        ev("b", "online_purchase", "2022-04-10T10:00:00", "2022-04-10T10:00:00"),
        ev("c", "online_purchase", "2021-03-10T10:00:00", "2021-03-10T10:00:00"),
    ]
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="x"), filter=lambda attr: '
        'attr["start_date"].year == 2022 and attr["start_date"].month == 3)'
    )
    kept = filter_events(events, plan.predicate, _ctx())
    assert [e.id for e in kept] == ["a"]


def test_filter_substring_lowercase():
    events = [
        ev("a", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00", location="Riverside Park"),
        ev("b", "calendar", "2020-01-02T10:00:00", "2020-01-02T11:00:00", location="Harbor View Cafe"),
    ]
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="x"), filter=lambda attr: "park" in attr["location"].lower())'
    )
    kept = filter_events(events, plan.predicate, _ctx())
    assert [e.id for e in kept] == ["a"]


def test_filter_false_constant_and_null_comparisons():
    events = _events([1, None, 3])
    false_plan = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: 1 == 2)')
    assert filter_events(events, false_plan.predicate, _ctx()) == []
    null_plan = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] > 0)')
    kept = filter_events(events, null_plan.predicate, _ctx())
    assert [e.get("v") for e in kept] == [1, 3]  # null compares false


def test_filter_today_shift_uses_context_clock():
    events = [
        ev("old", "note", "2020-01-01T10:00:00", "2020-01-01T10:00:00"),
        ev("new", "note", "2025-05-01T10:00:00", "2025-05-01T10:00:00"),
    ]
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="x"), filter=lambda attr: '
        'attr["start_date"] >= (date.today() - relativedelta(years=3)))'
    )
    kept = filter_events(events, plan.predicate, _ctx())  # clock 2025-06-01
    assert [e.id for e in kept] == ["new"]


def test_filter_fusion_law_randomized():
    rng = random.Random(9)
    p = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] > 10)').predicate
    q = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] < 30)').predicate
    both = parse_plan(
        'FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] > 10 and attr["v"] < 30)'
    ).predicate
    for _ in range(200):
        events = _events([rng.randrange(0, 40) for _ in range(rng.randrange(0, 15))])
        ctx = _ctx()
        fused = filter_events(events, both, ctx)
        chained = filter_events(filter_events(events, p, ctx), q, ctx)
        assert [e.id for e in fused] == [e.id for e in chained]


def test_filter_incomparable_ordering_raises():
    events = _events(["text"])
    plan = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] > 3)')
    with pytest.raises(PredicateTypeError):
        filter_events(events, plan.predicate, _ctx())


def test_subplan_scalar_memoized_once():
    calls = []
    store = EventStore([
        ev("m", "note", "2020-06-01T09:00:00", "2020-06-01T09:00:00", v=5),
    ])

    class SpyScripted(ScriptedDecomposer):
        pass

    # nested plan resolved from text: MIN over the store's start_datetime
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="note"), filter=lambda attr: '
        'attr["start_datetime"] >= MIN(l=RETRIEVE(query="note"), attr_name="start_datetime").result)'
    )
    ctx = make_context(store, clock=datetime(2025, 1, 1))
    result = execute(plan, ctx)
    assert [e.id for e in result.events] == ["m"]
    # the nested MIN ran exactly once for the whole filter call
    nested_runs = [r for r in ctx.trace.records if r.node_id.startswith("sub")]
    assert sum(1 for r in nested_runs if r.operator == "min") == 1


# ---------------------------------------------------------------------------
# map / apply / unnest
# ---------------------------------------------------------------------------


def test_map_len_over_groups():
    events = _events(["a", "a", "a", "b"], key="tag")
    groups = group_by(events, ["tag"])
    result = map_result(ExecutionResult.from_groups(groups), FnExpr("len"), "count")
    assert [g.key_values["count"] for g in result.groups] == [3, 1]


def test_map_weekday_name():
    events = [ev("a", "note", "2024-08-19T10:00:00", "2024-08-19T10:00:00")]
    result = map_result(ExecutionResult.from_events(events), FnExpr("weekday"), "weekday")
    assert result.events[0].get("weekday") == "Monday"


def test_map_over_empty():
    result = map_result(ExecutionResult.from_events([]), FnExpr("weekday"), "w")
    assert result.events == []


def test_map_len_over_plain_event_is_domain_error():
    events = _events([1])
    with pytest.raises(FunctionDomainError):
        map_result(ExecutionResult.from_events(events), FnExpr("len"), "n")


def test_apply_len():
    events = _events([1] * 7)
    result = apply_result(ExecutionResult.from_events(events), FnExpr("len"))
    assert result.value == 7
    assert result.provenance == frozenset(e.id for e in events)
    assert apply_result(ExecutionResult.from_events([]), FnExpr("len")).value == 0


def test_apply_after_filter_counts_survivors():
    events = _events([5, 15, 25])
    plan = parse_plan('FILTER(l=RETRIEVE(query="x"), filter=lambda attr: attr["v"] > 10)')
    kept = filter_events(events, plan.predicate, _ctx())
    assert apply_result(ExecutionResult.from_events(kept), FnExpr("len")).value == 2


def test_unnest_examples():
    events = [
        ev("a", "music_stream", "2020-01-01T10:00:00", "2020-01-01T10:03:00",
           artists=["A", "B"]),
        ev("b", "music_stream", "2020-01-02T10:00:00", "2020-01-02T10:03:00",
           artists=[]),
        ev("c", "music_stream", "2020-01-03T10:00:00", "2020-01-03T10:03:00",
           artists="solo"),
    ]
    out = unnest(events, "artists", "artist")
    assert [(e.id, e.get("artist")) for e in out] == [
        ("a#0", "A"), ("a#1", "B"), ("c#0", "solo"),
    ]


def test_unnest_total_count_is_sum_of_lengths():
    rng = random.Random(3)
    events = []
    base = datetime(2020, 1, 1)
    total = 0
    for i in range(50):
        members = [f"m{j}" for j in range(rng.randrange(0, 5))]
        total += len(members)
        start = base + timedelta(hours=i)
        events.append(ev(f"e{i}", "note", start.isoformat(), start.isoformat(),
                         xs=members))
    assert len(unnest(events, "xs", "x")) == total


# ---------------------------------------------------------------------------
# argmin / argmax / aggregates
# ---------------------------------------------------------------------------


def test_argmax_over_grouped_counts():
    events = _events(["pop"] * 5 + ["rock"] * 3, key="genre")
    groups = group_by(events, ["genre"])
    mapped = map_result(ExecutionResult.from_groups(groups), FnExpr("len"), "count")
    result = arg_extremum(mapped, "max", "count", "genre")
    assert result.value == "pop"


def test_arg_extremum_singleton_returns_element():
    events = _events([42])
    result = arg_extremum(ExecutionResult.from_events(events), "min", "v", None)
    assert result.kind == "events" and result.events[0].id == "e000"


def test_arg_extremum_matches_linear_scan_randomized():
    rng = random.Random(123)
    for _ in range(1000):
        values = [rng.choice((None, rng.randrange(0, 25))) for _ in range(rng.randrange(0, 18))]
        events = _events(values)
        child = ExecutionResult.from_events(events)
        non_null = [(e.get("v"), e.span.start, e.id) for e in events if e.get("v") is not None]
        for mode in ("min", "max"):
            if not non_null:
                with pytest.raises(EmptyAggregateError):
                    arg_extremum(child, mode, "v", None)
                continue
            chooser = min if mode == "min" else max
            best_value = chooser(v for v, _, _ in non_null)
            expected = min((s, i) for v, s, i in non_null if v == best_value)
            got = arg_extremum(child, mode, "v", None)
            assert (got.events[0].span.start, got.events[0].id) == expected


def test_aggregates_hand_examples():
    events = _events([5.99, 4.01], key="amount_spent")
    total = aggregate(ExecutionResult.from_events(events), "sum", "amount_spent")
    assert abs(total.value - 10.00) < 1e-9
    assert aggregate(ExecutionResult.from_events([]), "sum", "x").value == 0
    with pytest.raises(EmptyAggregateError):
        aggregate(ExecutionResult.from_events([]), "avg", "x")


def test_min_over_datetimes():
    events = [
        ev("a", "note", "2020-05-01T10:00:00", "2020-05-01T10:00:00"),
        ev("b", "note", "2020-01-01T10:00:00", "2020-01-01T10:00:00"),
        ev("c", "note", "2020-03-01T10:00:00", "2020-03-01T10:00:00"),
    ]
    mapped = [e.with_attrs({"dt": e.span.start}) for e in events]
    result = aggregate(ExecutionResult.from_events(mapped), "min", "dt")
    assert result.value == datetime(2020, 1, 1, 10)


def test_avg_exact_rational():
    events = _events([1, 2])
    result = aggregate(ExecutionResult.from_events(events), "avg", "v")
    assert result.value == float(Fraction(3, 2))


def test_aggregates_match_linear_scan_randomized():
    rng = random.Random(55)
    for _ in range(1000):
        values = [rng.choice((None, rng.randrange(-50, 50))) for _ in range(rng.randrange(0, 15))]
        events = _events(values)
        child = ExecutionResult.from_events(events)
        present = [v for v in values if v is not None]
        assert aggregate(child, "sum", "v").value == sum(present)
        if present:
            assert aggregate(child, "min", "v").value == min(present)
            assert aggregate(child, "max", "v").value == max(present)
            assert abs(aggregate(child, "avg", "v").value - sum(present) / len(present)) < 1e-12
        else:
            for mode in ("avg", "min", "max"):
                with pytest.raises(EmptyAggregateError):
                    aggregate(child, mode, "v")


def test_sum_non_numeric_rejected():
    events = _events(["abc"])
    with pytest.raises(NonNumericError):
        aggregate(ExecutionResult.from_events(events), "sum", "v")


def test_sum_over_scalar_is_type_mismatch():
    scalar = ExecutionResult.from_scalar(5, frozenset())
    with pytest.raises(TypeMismatchError):
        aggregate(scalar, "sum", "v")


def test_sum_over_bare_grouped_is_type_mismatch():
    events = _events(["a", "a", "b"], key="tag")
    grouped = ExecutionResult.from_groups(group_by(events, ["tag"]))
    with pytest.raises(TypeMismatchError):
        aggregate(grouped, "sum", "v")  # no MAP derived "v" on the groups
    # with the attr present (a grouping key or map result) aggregation works
    mapped = map_result(grouped, FnExpr("len"), "count")
    assert aggregate(mapped, "sum", "count").value == 3


# ---------------------------------------------------------------------------
# execute: whole trees
# ---------------------------------------------------------------------------


def test_full_counting_tree_matches_hand_count(counting_store, q3_script):
    plan = resolve(Q3, ScriptedDecomposer(q3_script))
    ctx = make_context(
        counting_store,
        clock=datetime(2020, 1, 1),
        extraction=ExtractionBundle(generator=RuleBasedGenerator()),
    )
    result = execute(plan, ctx)
    assert result.value == Q3_EXPECTED_COUNT
    assert result.provenance <= {e.id for e in counting_store}


def test_retrieve_only_plan_yields_events(counting_store):
    plan = parse_plan('RETRIEVE(query="I played football")')
    result = execute(plan, make_context(counting_store, clock=datetime(2020, 1, 1)))
    assert result.kind == "events" and len(result.events) == 2


def test_provenance_soundness_removing_unrelated_events(counting_store, q3_script):
    plan = resolve(Q3, ScriptedDecomposer(q3_script))
    ctx = make_context(
        counting_store,
        clock=datetime(2020, 1, 1),
        extraction=ExtractionBundle(generator=RuleBasedGenerator()),
    )
    result = execute(plan, ctx)
    keep = result.provenance
    trimmed = EventStore([e for e in counting_store if e.id in keep])
    ctx2 = make_context(
        trimmed,
        clock=datetime(2020, 1, 1),
        extraction=ExtractionBundle(generator=RuleBasedGenerator()),
    )
    assert execute(plan, ctx2).value == result.value


def test_trace_records_every_node(counting_store, q3_script):
    plan = resolve(Q3, ScriptedDecomposer(q3_script))
    ctx = make_context(
        counting_store,
        clock=datetime(2020, 1, 1),
        extraction=ExtractionBundle(generator=RuleBasedGenerator()),
    )
    execute(plan, ctx)
    operators = [r.operator for r in ctx.trace.records]
    assert operators.count("retrieve") == 2
    assert operators[-1] == "apply"
    assert len(ctx.trace.records) == 8
