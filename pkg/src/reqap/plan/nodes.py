"""AST for the operator-tree plan language.

Plan nodes mirror the operator surface (RETRIEVE, EXTRACT, JOIN, GROUP_BY,
FILTER, MAP, APPLY, UNNEST, ARGMIN/ARGMAX, SUM/AVG/MIN/MAX) plus QUD, the
unresolved sub-question placeholder. Filter predicates and join conditions
use a closed expression mini-language (``PredExpr``) instead of host-language
callables, so plans are data: printable, comparable, and safe to evaluate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Tuple, Union


class TypeTag(enum.Enum):
    STR = "str"
    INT = "int"
    FLOAT = "float"
    DATE = "date"
    TIME = "time"
    DATETIME = "datetime"
    LIST = "list"


# ---------------------------------------------------------------------------
# Predicate / function expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Attr:
    """Attribute access: ``attr["k"]`` in filters, ``i1.k``/``i2.k`` in joins."""

    key: str
    side: Optional[str] = None  # None, "i1" or "i2"


@dataclass(frozen=True)
class Literal:
    value: object


@dataclass(frozen=True)
class Cmp:
    op: str  # ==, !=, <, <=, >, >=
    left: "PredExpr"
    right: "PredExpr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # and / or
    operands: Tuple["PredExpr", ...]


@dataclass(frozen=True)
class Not:
    operand: "PredExpr"


@dataclass(frozen=True)
class Lower:
    operand: "PredExpr"


@dataclass(frozen=True)
class Contains:
    """Substring test: ``needle in haystack`` over text values."""

    needle: "PredExpr"
    haystack: "PredExpr"


@dataclass(frozen=True)
class AnyContains:
    """``any(needle in p.lower() for p in attr[list_key])``."""

    list_key: str
    needle: str
    side: Optional[str] = None


@dataclass(frozen=True)
class CalAccess:
    """Calendar accessor on a temporal value: year, month, day, hour, weekday."""

    base: "PredExpr"
    fieldname: str


CAL_FIELDS = ("year", "month", "day", "hour", "weekday")


@dataclass(frozen=True)
class Today:
    """The execution-context clock's current date (never the wall clock)."""


@dataclass(frozen=True)
class Period:
    years: int = 0
    months: int = 0
    days: int = 0


@dataclass(frozen=True)
class DateShift:
    """Calendar arithmetic: ``base - period`` (the only supported arithmetic)."""

    base: "PredExpr"
    period: Period


@dataclass(frozen=True)
class SubPlanScalar:
    """Value of a nested plan that must evaluate to a scalar: ``<plan>.result``."""

    plan: "PlanNode"


PredExpr = Union[
    Attr,
    Literal,
    Cmp,
    BoolOp,
    Not,
    Lower,
    Contains,
    AnyContains,
    CalAccess,
    Today,
    DateShift,
    SubPlanScalar,
]


# Functions usable in MAP/APPLY; a bare name uses the default key binding.
FN_REGISTRY = {
    "len": (),
    "weekday": ("key",),
    "month": ("key",),
    "year": ("key",),
    "day": ("key",),
    "hour": ("key",),
    "duration_minutes": (),
    "date_diff_days": ("key", "other"),
}


@dataclass(frozen=True)
class FnExpr:
    name: str
    bindings: Tuple[Tuple[str, str], ...] = ()

    def binding(self, name: str) -> Optional[str]:
        for key, value in self.bindings:
            if key == name:
                return value
        return None


# ---------------------------------------------------------------------------
# Plan nodes
# ---------------------------------------------------------------------------


def _pos_field():
    return field(default=(0, 0), compare=False, repr=False)


@dataclass(frozen=True)
class Retrieve:
    query: str
    input: Optional["PlanNode"] = None
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Extract:
    input: "PlanNode"
    keys: Tuple[str, ...]
    types: Tuple[TypeTag, ...]
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Join:
    left: "PlanNode"
    right: "PlanNode"
    condition: PredExpr
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class GroupBy:
    input: "PlanNode"
    keys: Tuple[str, ...]
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Filter:
    input: "PlanNode"
    predicate: PredExpr
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Map:
    input: "PlanNode"
    fn: FnExpr
    res_name: str = "map_result"
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Apply:
    input: "PlanNode"
    fn: FnExpr
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Unnest:
    input: "PlanNode"
    nested_key: str
    unnested_key: str
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class ArgExtremum:
    input: "PlanNode"
    mode: str  # "min" / "max"
    arg_key: str
    val_key: Optional[str] = None
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class Aggregate:
    input: "PlanNode"
    mode: str  # "sum" / "avg" / "min" / "max"
    key: str
    pos: Tuple[int, int] = _pos_field()


@dataclass(frozen=True)
class QudCall:
    question: str
    pos: Tuple[int, int] = _pos_field()


PlanNode = Union[
    Retrieve,
    Extract,
    Join,
    GroupBy,
    Filter,
    Map,
    Apply,
    Unnest,
    ArgExtremum,
    Aggregate,
    QudCall,
]


def children(node: PlanNode) -> Tuple[PlanNode, ...]:
    """Direct plan children, left to right (excludes sub-plans in predicates)."""
    if isinstance(node, Retrieve):
        return (node.input,) if node.input is not None else ()
    if isinstance(node, Join):
        return (node.left, node.right)
    if isinstance(node, QudCall):
        return ()
    return (node.input,)


def subplans_in_pred(expr: PredExpr) -> Iterator[PlanNode]:
    """Plans nested inside a predicate via ``SubPlanScalar``."""
    if isinstance(expr, SubPlanScalar):
        yield expr.plan
    elif isinstance(expr, Cmp):
        yield from subplans_in_pred(expr.left)
        yield from subplans_in_pred(expr.right)
    elif isinstance(expr, BoolOp):
        for operand in expr.operands:
            yield from subplans_in_pred(operand)
    elif isinstance(expr, (Not, Lower)):
        yield from subplans_in_pred(expr.operand)
    elif isinstance(expr, Contains):
        yield from subplans_in_pred(expr.needle)
        yield from subplans_in_pred(expr.haystack)
    elif isinstance(expr, (CalAccess, DateShift)):
        yield from subplans_in_pred(expr.base)


def walk(node: PlanNode) -> Iterator[PlanNode]:
    """Pre-order traversal including plans nested in predicates."""
    yield node
    if isinstance(node, Filter):
        for sub in subplans_in_pred(node.predicate):
            yield from walk(sub)
    if isinstance(node, Join):
        for sub in subplans_in_pred(node.condition):
            yield from walk(sub)
    for child in children(node):
        yield from walk(child)


def count_nodes(node: PlanNode) -> int:
    return sum(1 for _ in walk(node))


def has_qud(node: PlanNode) -> bool:
    return any(isinstance(n, QudCall) for n in walk(node))


def attr_keys_in_pred(expr: PredExpr) -> Iterator[Attr]:
    """All attribute references in a predicate (not descending into sub-plans)."""
    if isinstance(expr, Attr):
        yield expr
    elif isinstance(expr, AnyContains):
        yield Attr(expr.list_key, expr.side)
    elif isinstance(expr, Cmp):
        yield from attr_keys_in_pred(expr.left)
        yield from attr_keys_in_pred(expr.right)
    elif isinstance(expr, BoolOp):
        for operand in expr.operands:
            yield from attr_keys_in_pred(operand)
    elif isinstance(expr, (Not, Lower)):
        yield from attr_keys_in_pred(expr.operand)
    elif isinstance(expr, Contains):
        yield from attr_keys_in_pred(expr.needle)
        yield from attr_keys_in_pred(expr.haystack)
    elif isinstance(expr, (CalAccess, DateShift)):
        yield from attr_keys_in_pred(expr.base)
