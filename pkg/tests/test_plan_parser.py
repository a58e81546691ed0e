import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqap.plan import (
    Aggregate,
    Apply,
    ArgExtremum,
    Extract,
    Filter,
    FnExpr,
    Join,
    Map,
    PlanArityError,
    PlanSyntaxError,
    QudCall,
    Retrieve,
    SubPlanScalar,
    TypeTag,
    UnknownFunctionError,
    parse_plan,
    render_plan,
)

from plangen import random_plan
from published import ALL_SCRIPTS


def test_parse_sum_over_sub_question():
    plan = parse_plan(
        'SUM(l=QUD("my online purchases in March 2022 with amounts"), attr_name="amount_spent")'
    )
    assert isinstance(plan, Aggregate)
    assert plan.mode == "sum"
    assert plan.key == "amount_spent"
    assert plan.input == QudCall("my online purchases in March 2022 with amounts")


def test_parse_plain_retrieve():
    plan = parse_plan('RETRIEVE(query="I went running")')
    assert plan == Retrieve("I went running")


def test_missing_operands_is_arity_error():
    with pytest.raises(PlanArityError):
        parse_plan("SUM()")
    with pytest.raises(PlanArityError):
        parse_plan('SUM(l=QUD("x"))')


def test_positional_operator_args_rejected():
    with pytest.raises(PlanArityError):
        parse_plan('RETRIEVE("I went running")')


def test_unknown_operator_and_function():
    with pytest.raises(UnknownFunctionError):
        parse_plan('FROBNICATE(l=QUD("x"))')
    with pytest.raises(UnknownFunctionError):
        parse_plan('APPLY(l=QUD("x"), fct=reverse)')


def test_syntax_error_is_positioned():
    with pytest.raises(PlanSyntaxError) as info:
        parse_plan('SUM(l=QUD("x",, attr_name="y")')
    assert info.value.line >= 1


def test_extract_type_tags():
    plan = parse_plan(
        'EXTRACT(l=RETRIEVE(query="q"), attr_names=["a", "b", "c", "d"], '
        "attr_types=[date.fromisoformat, str, datetime.fromtimestamp, list])"
    )
    assert isinstance(plan, Extract)
    assert plan.types == (TypeTag.DATE, TypeTag.STR, TypeTag.DATETIME, TypeTag.LIST)


def test_filter_lambda_sugar_discards_header():
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="q"), filter=lambda attr: attr["x"] == 1)'
    )
    assert isinstance(plan, Filter)
    rendered = render_plan(plan)
    assert rendered.startswith('FILTER(l=RETRIEVE(query="q"), filter=lambda attr: ')


def test_subplan_scalar_in_filter():
    plan = parse_plan(
        'FILTER(l=RETRIEVE(query="a"), '
        'filter=lambda attr: attr["start_datetime"] >= QUD("first start").result)'
    )
    sub = plan.predicate.right
    assert isinstance(sub, SubPlanScalar)
    assert sub.plan == QudCall("first start")


def test_map_res_name_default():
    plan = parse_plan('MAP(l=RETRIEVE(query="q"), fct=len)')
    assert isinstance(plan, Map)
    assert plan.res_name == "map_result"
    assert plan.fn == FnExpr("len")


def test_argmin_optional_val_key():
    plan = parse_plan('ARGMIN(l=RETRIEVE(query="q"), arg_attr_name="a")')
    assert isinstance(plan, ArgExtremum)
    assert plan.mode == "min" and plan.val_key is None


def test_join_condition_parsed_from_string():
    plan = parse_plan(
        'JOIN(l1=RETRIEVE(query="a"), l2=RETRIEVE(query="b"), '
        'condition="i1.start_datetime <= i2.end_datetime and i2.start_datetime <= i1.end_datetime")'
    )
    assert isinstance(plan, Join)


def test_duplicate_kwarg_rejected():
    with pytest.raises(PlanSyntaxError):
        parse_plan('RETRIEVE(query="a", query="b")')


def test_every_published_fragment_parses_and_round_trips():
    count = 0
    for script in ALL_SCRIPTS.values():
        for fragment in script.values():
            plan = parse_plan(fragment)
            assert parse_plan(render_plan(plan)) == plan
            count += 1
    assert count >= 40


def test_whitespace_insensitive():
    compact = parse_plan('APPLY(l=QUD("x"),fct=len)')
    spread = parse_plan('APPLY(\n    l = QUD("x") ,\n    fct = len\n)')
    assert compact == spread == Apply(QudCall("x"), FnExpr("len"))


def test_random_tree_round_trip_bulk():
    """Round-trip law over ten thousand generated trees."""
    rng = random.Random(20_240_801)
    for i in range(10_000):
        plan = random_plan(rng, depth=rng.randrange(0, 5), allow_qud=(i % 3 == 0))
        rendered = render_plan(plan)
        assert parse_plan(rendered) == plan, rendered


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=0, max_value=2**32 - 1), st.integers(min_value=0, max_value=5))
def test_random_tree_round_trip_property(seed, depth):
    plan = random_plan(random.Random(seed), depth=depth, allow_qud=True)
    assert parse_plan(render_plan(plan)) == plan


def test_parser_totality_fuzz():
    """Fuzzed inputs either parse or raise a positioned PlanSyntaxError."""
    rng = random.Random(97)
    corpus = [fragment for script in ALL_SCRIPTS.values() for fragment in script.values()]
    corpus = corpus[:20]
    glyphs = "abqQRU(){}[]\"'\\,=.<>! \n\t0129_lifx"
    checked = 0
    for _ in range(100_000):
        base = rng.choice(corpus)
        position = rng.randrange(len(base))
        op = rng.random()
        if op < 0.4:
            mutated = base[:position] + rng.choice(glyphs) + base[position + 1 :]
        elif op < 0.7:
            mutated = base[:position] + rng.choice(glyphs) + base[position:]
        else:
            mutated = base[:position] + base[position + 1 :]
        try:
            parse_plan(mutated)
        except PlanSyntaxError as exc:
            assert exc.line >= 0 and exc.col >= 0
        checked += 1
    assert checked == 100_000
