"""Bottom-up execution of resolved operator trees with full answer provenance.

Each node consumes its children's results (event lists, groups, or scalars)
and produces an ExecutionResult whose provenance is the set of store event
ids that contributed along the winning path. A trace record per node feeds
the runtime reports and the user-facing answer traces.
"""

from __future__ import annotations

import time as _time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from fractions import Fraction
from math import fsum
from typing import Optional, Sequence

from .events import BUILTIN_KEYS, Event, EventStore
from .extraction import ExtractConfig, NullGenerator, SynonymTable, ValueGenerator, extract
from .plan.nodes import (
    Aggregate,
    AnyContains,
    Apply,
    ArgExtremum,
    Attr,
    BoolOp,
    CalAccess,
    Cmp,
    Contains,
    DateShift,
    Extract,
    Filter,
    FnExpr,
    GroupBy,
    Join,
    Literal,
    Lower,
    Map,
    Not,
    Period,
    PlanNode,
    PredExpr,
    QudCall,
    Retrieve,
    SubPlanScalar,
    Today,
    Unnest,
)
from .retrieval import (
    EventClassifier,
    LexicalClassifiers,
    LexicalScorer,
    PatternClassifier,
    RetrievalConfig,
    retrieve,
)
from .values import Value, text_to_scalar, value_to_text

WEEKDAY_NAMES = (
    "Monday",
    "Tuesday",
    "Wednesday",
    "Thursday",
    "Friday",
    "Saturday",
    "Sunday",
)


class ExecError(Exception):
    """Execution failure, annotated with the failing node's operator."""

    def __init__(self, message: str, node: Optional[PlanNode] = None):
        self.node = node
        if node is not None:
            message = f"{type(node).__name__}: {message}"
        super().__init__(message)


class TypeMismatchError(ExecError):
    pass


class PredicateTypeError(ExecError):
    pass


class EmptyAggregateError(ExecError):
    pass


class NonNumericError(ExecError):
    pass


class FunctionDomainError(ExecError):
    pass


class UnknownKeyInConditionError(ExecError):
    pass


class UnresolvedPlanError(ExecError):
    pass


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class Group:
    key_values: dict
    members: list

    def get(self, key: str) -> Optional[Value]:
        if key in self.key_values:
            return self.key_values[key]
        return None

    @property
    def span_start(self) -> datetime:
        return min(m.span.start for m in self.members)

    @property
    def min_id(self) -> str:
        return min(m.id for m in self.members)

    @property
    def provenance(self) -> frozenset:
        out: frozenset = frozenset()
        for member in self.members:
            out |= member.provenance
        return out


EVENTS = "events"
GROUPS = "groups"
SCALAR = "scalar"


@dataclass
class ExecutionResult:
    kind: str
    events: list = field(default_factory=list)
    groups: list = field(default_factory=list)
    value: Optional[Value] = None
    provenance: frozenset = field(default_factory=frozenset)

    @classmethod
    def from_events(cls, events: Sequence[Event]) -> "ExecutionResult":
        provenance: frozenset = frozenset()
        for event in events:
            provenance |= event.provenance
        return cls(kind=EVENTS, events=list(events), provenance=provenance)

    @classmethod
    def from_groups(cls, groups: Sequence[Group]) -> "ExecutionResult":
        provenance: frozenset = frozenset()
        for group in groups:
            provenance |= group.provenance
        return cls(kind=GROUPS, groups=list(groups), provenance=provenance)

    @classmethod
    def from_scalar(cls, value: Value, provenance: frozenset) -> "ExecutionResult":
        return cls(kind=SCALAR, value=value, provenance=provenance)

    @property
    def size(self) -> int:
        if self.kind == EVENTS:
            return len(self.events)
        if self.kind == GROUPS:
            return len(self.groups)
        return 1


@dataclass
class TraceRecord:
    node_id: str
    operator: str
    input_sizes: tuple
    output_size: int
    elapsed_s: float
    provenance_sample: tuple


class TraceRecorder:
    def __init__(self) -> None:
        self.records: list[TraceRecord] = []

    def add(self, record: TraceRecord) -> None:
        self.records.append(record)


# ---------------------------------------------------------------------------
# Context
# ---------------------------------------------------------------------------


@dataclass
class RetrievalBundle:
    cfg: RetrievalConfig = field(default_factory=RetrievalConfig)
    scorer: Optional[LexicalScorer] = None
    pattern_classifier: Optional[PatternClassifier] = None
    event_classifier: Optional[EventClassifier] = None
    # Direct query->events lookup used to evaluate reference plans over
    # ground-truth stores; bypasses the retrieval pipeline entirely.
    direct: Optional[dict] = None


@dataclass
class ExtractionBundle:
    generator: Optional[ValueGenerator] = None
    synonyms: Optional[SynonymTable] = None
    user_info: str = ""
    config: ExtractConfig = field(default_factory=ExtractConfig)


@dataclass
class ExecContext:
    """Everything one execution needs; immutable during a question (the trace
    recorder is an accumulating sink, not shared state)."""

    store: EventStore
    clock: datetime
    retrieval: RetrievalBundle = field(default_factory=RetrievalBundle)
    extraction: ExtractionBundle = field(default_factory=ExtractionBundle)
    trace: TraceRecorder = field(default_factory=TraceRecorder)


def make_context(
    store: EventStore,
    clock: Optional[datetime] = None,
    retrieval: Optional[RetrievalBundle] = None,
    extraction: Optional[ExtractionBundle] = None,
) -> ExecContext:
    ctx = ExecContext(
        store=store,
        clock=clock or datetime(2025, 1, 1),
        retrieval=retrieval or RetrievalBundle(),
        extraction=extraction or ExtractionBundle(),
    )
    if ctx.retrieval.scorer is None:
        ctx.retrieval.scorer = LexicalScorer(store)
    if ctx.retrieval.pattern_classifier is None or ctx.retrieval.event_classifier is None:
        lexical = LexicalClassifiers()
        ctx.retrieval.pattern_classifier = ctx.retrieval.pattern_classifier or lexical
        ctx.retrieval.event_classifier = ctx.retrieval.event_classifier or lexical
    if ctx.extraction.generator is None:
        ctx.extraction.generator = NullGenerator()
    if ctx.extraction.synonyms is None:
        ctx.extraction.synonyms = SynonymTable()
    return ctx


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


def execute(plan: PlanNode, ctx: ExecContext, node_id: str = "1") -> ExecutionResult:
    started = _time.perf_counter()
    if isinstance(plan, QudCall):
        raise UnresolvedPlanError(f"unresolved sub-question {plan.question!r}", plan)

    if isinstance(plan, Retrieve):
        pool = None
        input_sizes: tuple = ()
        if plan.input is not None:
            child = execute(plan.input, ctx, node_id + ".1")
            _require(child, EVENTS, plan)
            pool = child.events
            input_sizes = (child.size,)
        if ctx.retrieval.direct is not None:
            if plan.query not in ctx.retrieval.direct:
                raise ExecError(f"no direct lookup for query {plan.query!r}", plan)
            events = list(ctx.retrieval.direct[plan.query])
            if pool is not None:
                pool_ids = {e.id for e in pool}
                events = [e for e in events if e.id in pool_ids]
        else:
            events = retrieve(
                plan.query,
                ctx.store,
                input=pool,
                cfg=ctx.retrieval.cfg,
                scorer=ctx.retrieval.scorer,
                pattern_classifier=ctx.retrieval.pattern_classifier,
                event_classifier=ctx.retrieval.event_classifier,
            )
        result = ExecutionResult.from_events(events)
    elif isinstance(plan, Extract):
        child = execute(plan.input, ctx, node_id + ".1")
        _require(child, EVENTS, plan)
        input_sizes = (child.size,)
        augmented = extract(
            child.events,
            plan.keys,
            plan.types,
            generator=ctx.extraction.generator,
            user_info=ctx.extraction.user_info,
            synonyms=ctx.extraction.synonyms,
            config=ctx.extraction.config,
        )
        result = ExecutionResult.from_events(augmented)
    elif isinstance(plan, Join):
        left = execute(plan.left, ctx, node_id + ".1")
        right = execute(plan.right, ctx, node_id + ".2")
        _require(left, EVENTS, plan)
        _require(right, EVENTS, plan)
        input_sizes = (left.size, right.size)
        result = ExecutionResult.from_events(
            join(left.events, right.events, plan.condition, ctx, node=plan)
        )
    elif isinstance(plan, GroupBy):
        child = execute(plan.input, ctx, node_id + ".1")
        _require(child, EVENTS, plan)
        input_sizes = (child.size,)
        result = ExecutionResult.from_groups(group_by(child.events, plan.keys))
    elif isinstance(plan, Filter):
        child = execute(plan.input, ctx, node_id + ".1")
        _require(child, EVENTS, plan)
        input_sizes = (child.size,)
        result = ExecutionResult.from_events(
            filter_events(child.events, plan.predicate, ctx, node=plan)
        )
    elif isinstance(plan, Map):
        child = execute(plan.input, ctx, node_id + ".1")
        input_sizes = (child.size,)
        result = map_result(child, plan.fn, plan.res_name, node=plan)
    elif isinstance(plan, Apply):
        child = execute(plan.input, ctx, node_id + ".1")
        input_sizes = (child.size,)
        result = apply_result(child, plan.fn, node=plan)
    elif isinstance(plan, Unnest):
        child = execute(plan.input, ctx, node_id + ".1")
        _require(child, EVENTS, plan)
        input_sizes = (child.size,)
        result = ExecutionResult.from_events(
            unnest(child.events, plan.nested_key, plan.unnested_key)
        )
    elif isinstance(plan, ArgExtremum):
        child = execute(plan.input, ctx, node_id + ".1")
        input_sizes = (child.size,)
        result = arg_extremum(child, plan.mode, plan.arg_key, plan.val_key, node=plan)
    elif isinstance(plan, Aggregate):
        child = execute(plan.input, ctx, node_id + ".1")
        input_sizes = (child.size,)
        result = aggregate(child, plan.mode, plan.key, node=plan)
    else:
        raise ExecError(f"unknown plan node {type(plan).__name__}", plan)

    elapsed = _time.perf_counter() - started
    operator = _operator_name(plan)
    sample = tuple(sorted(result.provenance)[:5])
    ctx.trace.add(
        TraceRecord(node_id, operator, input_sizes, result.size, elapsed, sample)
    )
    return result


def _operator_name(plan: PlanNode) -> str:
    if isinstance(plan, ArgExtremum):
        return f"arg{plan.mode}"
    if isinstance(plan, Aggregate):
        return plan.mode
    if isinstance(plan, GroupBy):
        return "group_by"
    return type(plan).__name__.lower()


def _require(result: ExecutionResult, kind: str, node: PlanNode) -> None:
    if result.kind != kind:
        raise TypeMismatchError(f"expected {kind}, got {result.kind}", node)


# ---------------------------------------------------------------------------
# Predicate evaluation
# ---------------------------------------------------------------------------


class _PredScope:
    """Bindings for predicate evaluation plus the per-call sub-plan memo."""

    def __init__(self, ctx: ExecContext):
        self.ctx = ctx
        self.memo: dict = {}

    def subplan_value(self, plan: PlanNode) -> Value:
        if plan not in self.memo:
            result = execute(plan, self.ctx, node_id="sub")
            if result.kind != SCALAR:
                raise PredicateTypeError("nested plan must produce a scalar", plan)
            self.memo[plan] = result.value
        return self.memo[plan]


def eval_pred(expr: PredExpr, bindings: dict, scope: _PredScope) -> bool:
    value = _eval(expr, bindings, scope)
    return bool(value)


def _lookup(attr: Attr, bindings: dict) -> Optional[Value]:
    if attr.side is not None:
        event = bindings.get(attr.side)
    else:
        event = bindings.get("attr")
    if event is None:
        raise PredicateTypeError(f"no binding for attribute reference {attr}")
    return event.get(attr.key)


def _eval(expr: PredExpr, bindings: dict, scope: _PredScope):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, Attr):
        return _lookup(expr, bindings)
    if isinstance(expr, Today):
        return scope.ctx.clock.date()
    if isinstance(expr, DateShift):
        base = _eval(expr.base, bindings, scope)
        if base is None:
            return None
        return shift_back(base, expr.period)
    if isinstance(expr, Lower):
        value = _eval(expr.operand, bindings, scope)
        if value is None:
            return None
        if not isinstance(value, str):
            value = value_to_text(value)
        return value.lower()
    if isinstance(expr, CalAccess):
        value = _eval(expr.base, bindings, scope)
        return cal_field(value, expr.fieldname)
    if isinstance(expr, SubPlanScalar):
        return scope.subplan_value(expr.plan)
    if isinstance(expr, Cmp):
        left = _eval(expr.left, bindings, scope)
        right = _eval(expr.right, bindings, scope)
        return compare(expr.op, left, right)
    if isinstance(expr, Contains):
        needle = _eval(expr.needle, bindings, scope)
        haystack = _eval(expr.haystack, bindings, scope)
        if needle is None or haystack is None:
            return False
        if not isinstance(needle, str):
            needle = value_to_text(needle)
        if not isinstance(haystack, str):
            haystack = value_to_text(haystack)
        return needle in haystack
    if isinstance(expr, AnyContains):
        value = _lookup(Attr(expr.list_key, expr.side), bindings)
        if value is None:
            return False
        members = value if isinstance(value, list) else [value]
        needle = expr.needle.lower()
        return any(needle in value_to_text(member).lower() for member in members)
    if isinstance(expr, Not):
        return not eval_pred(expr.operand, bindings, scope)
    if isinstance(expr, BoolOp):
        if expr.op == "and":
            return all(eval_pred(op, bindings, scope) for op in expr.operands)
        return any(eval_pred(op, bindings, scope) for op in expr.operands)
    raise PredicateTypeError(f"cannot evaluate {type(expr).__name__}")


def cal_field(value: Optional[Value], fieldname: str):
    if value is None:
        return None
    if isinstance(value, str):
        value = text_to_scalar(value)
    if fieldname == "weekday":
        if isinstance(value, (date, datetime)):
            return WEEKDAY_NAMES[value.weekday()]
        return None
    if fieldname == "hour":
        if isinstance(value, (datetime, time)):
            return value.hour
        return None
    if isinstance(value, (date, datetime)):
        return getattr(value, fieldname, None)
    return None


def shift_back(base, period: Period):
    """Calendar subtraction: years and months with day clamping, then days."""
    if isinstance(base, str):
        base = text_to_scalar(base)
    if not isinstance(base, (date, datetime)):
        raise PredicateTypeError(f"date arithmetic needs a date, got {type(base).__name__}")
    months_total = (base.year * 12 + (base.month - 1)) - (period.years * 12 + period.months)
    year, month = divmod(months_total, 12)
    month += 1
    day = min(base.day, _days_in_month(year, month))
    shifted = base.replace(year=year, month=month, day=day)
    return shifted - timedelta(days=period.days)


def _days_in_month(year: int, month: int) -> int:
    if month == 12:
        nxt = date(year + 1, 1, 1)
    else:
        nxt = date(year, month + 1, 1)
    return (nxt - timedelta(days=1)).day


def _coerce_pair(a, b):
    if isinstance(a, str) and not isinstance(b, str) and b is not None:
        a = text_to_scalar(a)
    if isinstance(b, str) and not isinstance(a, str) and a is not None:
        b = text_to_scalar(b)
    a_dt = isinstance(a, datetime)
    b_dt = isinstance(b, datetime)
    if a_dt != b_dt:
        if isinstance(a, date) and not a_dt:
            a = datetime.combine(a, time.min)
        if isinstance(b, date) and not b_dt:
            b = datetime.combine(b, time.min)
    if isinstance(a, timedelta) and isinstance(b, (int, float)):
        b = timedelta(seconds=b)
    if isinstance(b, timedelta) and isinstance(a, (int, float)):
        a = timedelta(seconds=a)
    return a, b


def _same_family(a, b) -> bool:
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, (bool, int, float)) and isinstance(b, (bool, int, float))
    for family in ((int, float), (str,), (datetime,), (time,), (timedelta,)):
        if isinstance(a, family) and isinstance(b, family):
            return True
    if isinstance(a, date) and isinstance(b, date) and not isinstance(a, datetime) and not isinstance(b, datetime):
        return True
    return False


def compare(op: str, left, right) -> bool:
    """Null operands make any comparison false; ordering needs matching types."""
    if left is None or right is None:
        return False
    left, right = _coerce_pair(left, right)
    if op == "==":
        return left == right if _same_family(left, right) else False
    if op == "!=":
        return left != right if _same_family(left, right) else True
    if not _same_family(left, right):
        raise PredicateTypeError(
            f"cannot order {type(left).__name__} against {type(right).__name__}"
        )
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise PredicateTypeError(f"unknown comparison {op}")


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def filter_events(
    events: Sequence[Event], predicate: PredExpr, ctx: ExecContext, node: Optional[PlanNode] = None
) -> list:
    scope = _PredScope(ctx)
    kept = []
    for event in events:
        try:
            if eval_pred(predicate, {"attr": event}, scope):
                kept.append(event)
        except PredicateTypeError as exc:
            raise PredicateTypeError(str(exc), node) from exc
    return kept


def _flatten_conjuncts(expr: PredExpr) -> list:
    if isinstance(expr, BoolOp) and expr.op == "and":
        out = []
        for operand in expr.operands:
            out.extend(_flatten_conjuncts(operand))
        return out
    return [expr]


def _side_keys(condition: PredExpr) -> dict:
    from .plan.nodes import attr_keys_in_pred

    keys: dict[str, set] = {"i1": set(), "i2": set()}
    for ref in attr_keys_in_pred(condition):
        if ref.side in keys:
            keys[ref.side].add(ref.key)
    return keys


def _check_join_keys(events: Sequence[Event], keys: set, side: str, node) -> None:
    for key in keys:
        if key in BUILTIN_KEYS:
            continue
        if events and not any(e.has(key) for e in events):
            raise UnknownKeyInConditionError(
                f"join condition references {side}.{key} which no event carries", node
            )


_ORDER_KEY_CATEGORIES = {datetime: "t", date: "t", time: "m", int: "n", float: "n", str: "s"}


def _band_value(value):
    if isinstance(value, bool) or value is None:
        return None
    if isinstance(value, datetime):
        return ("t", value)
    if isinstance(value, date):
        return ("t", datetime.combine(value, time.min))
    if isinstance(value, time):
        return ("m", value)
    if isinstance(value, (int, float)):
        return ("n", float(value))
    if isinstance(value, str):
        return ("s", value)
    return None


def _driving_conjunct(condition: PredExpr):
    """First conjunct of shape ``i1.a <op> i2.b`` usable to band the merge."""
    for conjunct in _flatten_conjuncts(condition):
        if not isinstance(conjunct, Cmp) or conjunct.op == "!=":
            continue
        left, right = conjunct.left, conjunct.right
        if isinstance(left, Attr) and isinstance(right, Attr) and left.side and right.side:
            if left.side == right.side:
                continue
            if left.side == "i2":
                flipped = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "=="}
                return right, flipped[conjunct.op], left
            return left, conjunct.op, right
    return None


def join(
    left: Sequence[Event],
    right: Sequence[Event],
    condition: PredExpr,
    ctx: ExecContext,
    node: Optional[PlanNode] = None,
) -> list:
    """All pairs satisfying the condition, merged left+right with ``__r`` suffixes.

    Both sides are sorted on the keys the driving temporal comparison refers
    to and merged with a band scan; conditions with no such comparison fall
    back to the nested loop.
    """
    side_keys = _side_keys(condition)
    _check_join_keys(left, side_keys["i1"], "i1", node)
    _check_join_keys(right, side_keys["i2"], "i2", node)

    scope = _PredScope(ctx)
    pairs: list[tuple] = []
    driver = _driving_conjunct(condition)
    banded = False
    if driver is not None:
        left_ref, op, right_ref = driver
        right_sorted = []
        categories = set()
        for event in right:
            banded_value = _band_value(event.get(right_ref.key))
            if banded_value is None:
                continue
            categories.add(banded_value[0])
            right_sorted.append((banded_value, event))
        for event in left:
            banded_value = _band_value(event.get(left_ref.key))
            if banded_value is not None:
                categories.add(banded_value[0])
        # heterogeneous key types cannot be banded; the nested loop raises
        # the proper ordering error instead of silently skipping pairs
        usable = len(categories) <= 1
        if usable:
            right_sorted.sort(key=lambda pair: pair[0])
        if usable:
            banded = True
            band_keys = [pair[0] for pair in right_sorted]
            for levent in left:
                lvalue = _band_value(levent.get(left_ref.key))
                if lvalue is None:
                    continue
                if op == "==":
                    lo = bisect_left(band_keys, lvalue)
                    hi = bisect_right(band_keys, lvalue)
                elif op in ("<", "<="):
                    lo = bisect_left(band_keys, lvalue) if op == "<=" else bisect_right(band_keys, lvalue)
                    hi = len(band_keys)
                else:  # > / >=
                    lo = 0
                    hi = bisect_right(band_keys, lvalue) if op == ">=" else bisect_left(band_keys, lvalue)
                for _, revent in right_sorted[lo:hi]:
                    if eval_pred(condition, {"i1": levent, "i2": revent}, scope):
                        pairs.append((levent, revent))
    if not banded:
        for levent in left:
            for revent in right:
                if eval_pred(condition, {"i1": levent, "i2": revent}, scope):
                    pairs.append((levent, revent))

    combined = [_combine_pair(levent, revent) for levent, revent in pairs]
    combined.sort(key=lambda e: (e.span.start, e.id))
    return combined


def _combine_pair(left: Event, right: Event) -> Event:
    attrs = dict(left.attrs)
    for key, value in right.attrs.items():
        if key in attrs:
            attrs[f"{key}__r"] = value
        else:
            attrs[key] = value
    return Event(
        id=f"{left.id}+{right.id}",
        source=left.source,
        span=left.span.hull(right.span),
        attrs=attrs,
        provenance=left.provenance | right.provenance,
    )


def group_by(events: Sequence[Event], keys: Sequence[str]) -> list:
    """One group per distinct key combination, in first-appearance order."""
    groups: dict[tuple, Group] = {}
    for event in events:
        values = tuple(_hashable(event.get(key)) for key in keys)
        if values not in groups:
            groups[values] = Group(
                key_values={key: event.get(key) for key in keys}, members=[]
            )
        groups[values].members.append(event)
    return list(groups.values())


def _hashable(value):
    return tuple(value) if isinstance(value, list) else value


def map_result(
    child: ExecutionResult, fn: FnExpr, res_name: str, node: Optional[PlanNode] = None
) -> ExecutionResult:
    if child.kind == EVENTS:
        mapped = [e.with_attrs({res_name: eval_fn_event(fn, e, node)}) for e in child.events]
        return ExecutionResult.from_events(mapped)
    if child.kind == GROUPS:
        groups = []
        for group in child.groups:
            key_values = dict(group.key_values)
            key_values[res_name] = eval_fn_group(fn, group, node)
            groups.append(Group(key_values=key_values, members=group.members))
        return ExecutionResult.from_groups(groups)
    raise TypeMismatchError("MAP input must be events or groups", node)


def apply_result(
    child: ExecutionResult, fn: FnExpr, node: Optional[PlanNode] = None
) -> ExecutionResult:
    if fn.name != "len":
        raise FunctionDomainError(f"APPLY supports len over lists, not {fn.name}", node)
    if child.kind == EVENTS:
        return ExecutionResult.from_scalar(len(child.events), child.provenance)
    if child.kind == GROUPS:
        return ExecutionResult.from_scalar(len(child.groups), child.provenance)
    raise TypeMismatchError("APPLY input must be events or groups", node)


def eval_fn_event(fn: FnExpr, event: Event, node: Optional[PlanNode] = None) -> Value:
    if fn.name == "len":
        value = event.get(fn.binding("key") or "")
        if isinstance(value, list):
            return len(value)
        raise FunctionDomainError("len over a single event needs a list-valued key", node)
    if fn.name == "duration_minutes":
        return int(event.span.duration.total_seconds() // 60)
    if fn.name == "date_diff_days":
        first = event.get(fn.binding("key") or "end_date")
        second = event.get(fn.binding("other") or "start_date")
        first, second = _coerce_pair(first, second)
        if isinstance(first, (date, datetime)) and isinstance(second, (date, datetime)):
            return (first - second).days
        raise FunctionDomainError("date_diff_days needs two date-valued keys", node)
    default_key = "start_time" if fn.name == "hour" else "start_date"
    value = event.get(fn.binding("key") or default_key)
    result = cal_field(value, fn.name)
    if result is None:
        raise FunctionDomainError(f"{fn.name} undefined for {value!r}", node)
    return result


def eval_fn_group(fn: FnExpr, group: Group, node: Optional[PlanNode] = None) -> Value:
    if fn.name == "len":
        return len(group.members)
    key = fn.binding("key")
    if key is not None and key in group.key_values:
        result = cal_field(group.key_values[key], fn.name)
        if result is not None:
            return result
    raise FunctionDomainError(f"{fn.name} undefined for a group", node)


def unnest(events: Sequence[Event], nested_key: str, unnested_key: str) -> list:
    out = []
    for event in events:
        value = event.get(nested_key)
        if value is None:
            continue
        members = value if isinstance(value, list) else [value]
        for ordinal, member in enumerate(members):
            out.append(event.with_attrs({unnested_key: member}, id=f"{event.id}#{ordinal}"))
    return out


def _extremum_elements(child: ExecutionResult, node):
    if child.kind == EVENTS:
        return [
            (event, event.get, event.span.start, event.id, event.provenance)
            for event in child.events
        ]
    if child.kind == GROUPS:
        return [
            (group, group.get, group.span_start, group.min_id, group.provenance)
            for group in child.groups
        ]
    raise TypeMismatchError("ARGMIN/ARGMAX input must be events or groups", node)


def arg_extremum(
    child: ExecutionResult,
    mode: str,
    arg_key: str,
    val_key: Optional[str],
    node: Optional[PlanNode] = None,
) -> ExecutionResult:
    """Extremal element by ``arg_key``; ties break on earliest start then id."""
    elements = _extremum_elements(child, node)
    best = None
    best_key = None
    for element, getter, start, ident, provenance in elements:
        value = getter(arg_key)
        banded = _band_value(value)
        if banded is None:
            continue
        if best_key is not None and banded[0] != best_key[0][0]:
            raise TypeMismatchError(
                f"mixed value types under {arg_key!r} in ARG{mode.upper()}", node
            )
        candidate_key = (banded, start, ident)
        if best is None:
            best, best_key = (element, getter, provenance), candidate_key
            continue
        better = (
            candidate_key[0] < best_key[0]
            if mode == "min"
            else candidate_key[0] > best_key[0]
        )
        tie = candidate_key[0] == best_key[0] and (candidate_key[1], candidate_key[2]) < (
            best_key[1],
            best_key[2],
        )
        if better or tie:
            best, best_key = (element, getter, provenance), candidate_key
    if best is None:
        raise EmptyAggregateError(f"no non-null values under {arg_key!r}", node)
    element, getter, provenance = best
    if val_key is None:
        if isinstance(element, Group):
            return ExecutionResult.from_groups([element])
        return ExecutionResult.from_events([element])
    return ExecutionResult.from_scalar(getter(val_key), provenance)


def aggregate(
    child: ExecutionResult, mode: str, key: str, node: Optional[PlanNode] = None
) -> ExecutionResult:
    if child.kind == EVENTS:
        pairs = [(e.get(key), e.provenance) for e in child.events]
    elif child.kind == GROUPS:
        # groups must actually carry the key (derived via MAP or grouping);
        # aggregating a bare grouped result is a contract violation
        if child.groups and not any(key in g.key_values for g in child.groups):
            raise TypeMismatchError(
                f"{mode.upper()} over groups requires key {key!r} on the groups", node
            )
        pairs = [(g.get(key), g.provenance) for g in child.groups]
    else:
        raise TypeMismatchError(f"{mode.upper()} input must be events or groups", node)

    values = []
    provenance: frozenset = frozenset()
    for value, lineage in pairs:
        if value is None:
            continue
        values.append(value)
        provenance |= lineage

    if mode == "sum":
        if not values:
            return ExecutionResult.from_scalar(0, frozenset())
        _require_numeric(values, key, node)
        if all(isinstance(v, int) for v in values):
            return ExecutionResult.from_scalar(sum(values), provenance)
        return ExecutionResult.from_scalar(fsum(values), provenance)
    if not values:
        raise EmptyAggregateError(f"no non-null values under {key!r}", node)
    if mode == "avg":
        _require_numeric(values, key, node)
        if all(isinstance(v, int) for v in values):
            exact = Fraction(sum(values), len(values))
            return ExecutionResult.from_scalar(float(exact), provenance)
        return ExecutionResult.from_scalar(fsum(values) / len(values), provenance)
    # min / max over numbers, dates, times or datetimes
    banded = []
    for value in values:
        b = _band_value(value)
        if b is None:
            raise NonNumericError(f"{mode} cannot order value {value!r} under {key!r}", node)
        banded.append((b, value))
    categories = {b[0] for b, _ in banded}
    if len(categories) > 1:
        raise NonNumericError(f"mixed value types under {key!r}", node)
    chooser = min if mode == "min" else max
    _, picked = chooser(banded, key=lambda pair: pair[0])
    return ExecutionResult.from_scalar(picked, provenance)


def _require_numeric(values: list, key: str, node) -> None:
    for value in values:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NonNumericError(f"non-numeric value {value!r} under {key!r}", node)
