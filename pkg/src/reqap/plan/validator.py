"""Static plan validation: key availability, type arity, and shape checks.

Every attribute key an operator consumes must be a built-in event key or be
produced somewhere in that operator's subtree (by EXTRACT, MAP, UNNEST or
GROUP_BY). Shape checking catches aggregation over scalar inputs before
execution does.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..events import BUILTIN_KEYS
from .nodes import (
    Aggregate,
    Apply,
    ArgExtremum,
    Extract,
    Filter,
    GroupBy,
    Join,
    Map,
    PlanNode,
    QudCall,
    Retrieve,
    Unnest,
    attr_keys_in_pred,
    subplans_in_pred,
)

EVENTS = "events"
GROUPS = "groups"
SCALAR = "scalar"


@dataclass(frozen=True)
class Diagnostic:
    level: str
    code: str
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.level} {self.code} {self.line}:{self.col} {self.message}"


def _error(code: str, node: PlanNode, message: str) -> Diagnostic:
    line, col = node.pos
    return Diagnostic("ERROR", code, line, col, message)


def validate_plan(plan: PlanNode) -> list:
    """Collect diagnostics for a fully resolved plan; empty list means valid."""
    diagnostics: list[Diagnostic] = []
    _check(plan, diagnostics)
    return diagnostics


def produced_keys(node: PlanNode) -> set:
    """Keys added by this subtree (not counting built-in event keys)."""
    if isinstance(node, QudCall):
        return set()
    produced: set[str] = set()
    if isinstance(node, Extract):
        produced |= set(node.keys)
    elif isinstance(node, Map):
        produced.add(node.res_name)
    elif isinstance(node, Unnest):
        produced.add(node.unnested_key)
    elif isinstance(node, GroupBy):
        produced |= set(node.keys)
    if isinstance(node, Join):
        produced |= produced_keys(node.left) | produced_keys(node.right)
    elif isinstance(node, Retrieve):
        if node.input is not None:
            produced |= produced_keys(node.input)
    else:
        child = getattr(node, "input", None)
        if child is not None:
            produced |= produced_keys(child)
    return produced


def _available(node: PlanNode) -> set:
    return produced_keys(node) | set(BUILTIN_KEYS)


def _check_key(
    consumer: PlanNode, key: str, source: PlanNode, role: str, diagnostics: list
) -> None:
    if key not in _available(source):
        diagnostics.append(
            _error(
                "unproduced-key",
                consumer,
                f"{role} {key!r} is neither a built-in event key nor produced "
                f"by a descendant operator",
            )
        )


def _check(node: PlanNode, diagnostics: list) -> str:
    """Validate one node and return its result shape."""
    if isinstance(node, QudCall):
        diagnostics.append(
            _error("unresolved-qud", node, f"unresolved sub-question: {node.question!r}")
        )
        return EVENTS

    if isinstance(node, Retrieve):
        if node.input is not None:
            shape = _check(node.input, diagnostics)
            if shape != EVENTS:
                diagnostics.append(
                    _error("scalar-input", node, "RETRIEVE input must be a list of events")
                )
        return EVENTS

    if isinstance(node, Extract):
        shape = _check(node.input, diagnostics)
        if shape != EVENTS:
            diagnostics.append(
                _error("scalar-input", node, "EXTRACT input must be a list of events")
            )
        if len(node.keys) != len(node.types):
            diagnostics.append(
                _error(
                    "type-arity",
                    node,
                    f"EXTRACT has {len(node.keys)} keys but {len(node.types)} types",
                )
            )
        return EVENTS

    if isinstance(node, Join):
        left_shape = _check(node.left, diagnostics)
        right_shape = _check(node.right, diagnostics)
        if left_shape != EVENTS or right_shape != EVENTS:
            diagnostics.append(
                _error("scalar-input", node, "JOIN inputs must be lists of events")
            )
        for ref in attr_keys_in_pred(node.condition):
            if ref.side == "i1":
                _check_key(node, ref.key, node.left, "join key", diagnostics)
            elif ref.side == "i2":
                _check_key(node, ref.key, node.right, "join key", diagnostics)
        for sub in subplans_in_pred(node.condition):
            _check(sub, diagnostics)
        return EVENTS

    if isinstance(node, GroupBy):
        shape = _check(node.input, diagnostics)
        if shape != EVENTS:
            diagnostics.append(
                _error("scalar-input", node, "GROUP_BY input must be a list of events")
            )
        for key in node.keys:
            _check_key(node, key, node.input, "grouping key", diagnostics)
        return GROUPS

    if isinstance(node, Filter):
        shape = _check(node.input, diagnostics)
        if shape != EVENTS:
            diagnostics.append(
                _error("scalar-input", node, "FILTER input must be a list of events")
            )
        for ref in attr_keys_in_pred(node.predicate):
            _check_key(node, ref.key, node.input, "filter key", diagnostics)
        for sub in subplans_in_pred(node.predicate):
            _check(sub, diagnostics)
        return EVENTS

    if isinstance(node, Map):
        shape = _check(node.input, diagnostics)
        if shape == SCALAR:
            diagnostics.append(
                _error("scalar-input", node, "MAP input must be events or groups")
            )
        for _, bound_key in node.fn.bindings:
            _check_key(node, bound_key, node.input, "function key", diagnostics)
        return shape

    if isinstance(node, Apply):
        shape = _check(node.input, diagnostics)
        if shape == SCALAR:
            diagnostics.append(
                _error("scalar-input", node, "APPLY input must be events or groups")
            )
        for _, bound_key in node.fn.bindings:
            _check_key(node, bound_key, node.input, "function key", diagnostics)
        return SCALAR

    if isinstance(node, Unnest):
        shape = _check(node.input, diagnostics)
        if shape != EVENTS:
            diagnostics.append(
                _error("scalar-input", node, "UNNEST input must be a list of events")
            )
        _check_key(node, node.nested_key, node.input, "nested key", diagnostics)
        return EVENTS

    if isinstance(node, ArgExtremum):
        shape = _check(node.input, diagnostics)
        if shape == SCALAR:
            diagnostics.append(
                _error("scalar-input", node, "ARGMIN/ARGMAX input must be events or groups")
            )
        _check_key(node, node.arg_key, node.input, "arg key", diagnostics)
        if node.val_key is not None:
            _check_key(node, node.val_key, node.input, "value key", diagnostics)
            return SCALAR
        return shape

    if isinstance(node, Aggregate):
        shape = _check(node.input, diagnostics)
        if shape == SCALAR:
            diagnostics.append(
                _error(
                    "scalar-input",
                    node,
                    f"{node.mode.upper()} aggregates events or groups, not a scalar",
                )
            )
        _check_key(node, node.key, node.input, "aggregation key", diagnostics)
        return SCALAR

    raise TypeError(f"not a plan node: {node!r}")
