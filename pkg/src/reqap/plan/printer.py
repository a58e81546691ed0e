"""Canonical text rendering of plans; ``parse_plan(render_plan(p))`` equals ``p``."""

from __future__ import annotations

from .nodes import (
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
    PlanNode,
    PredExpr,
    QudCall,
    Retrieve,
    SubPlanScalar,
    Today,
    TypeTag,
    Unnest,
)

_TAG_TEXT = {
    TypeTag.STR: "str",
    TypeTag.INT: "int",
    TypeTag.FLOAT: "float",
    TypeTag.LIST: "list",
    TypeTag.DATE: "date.fromisoformat",
    TypeTag.TIME: "time.fromisoformat",
    TypeTag.DATETIME: "datetime.fromisoformat",
}

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def quote(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20:
            out.append(f"\\x{ord(ch):02x}")
        else:
            out.append(ch)
    return '"' + "".join(out) + '"'


def render_plan(node: PlanNode) -> str:
    if isinstance(node, QudCall):
        return f"QUD({quote(node.question)})"
    if isinstance(node, Retrieve):
        if node.input is None:
            return f"RETRIEVE(query={quote(node.query)})"
        return f"RETRIEVE(query={quote(node.query)}, l={render_plan(node.input)})"
    if isinstance(node, Extract):
        keys = ", ".join(quote(k) for k in node.keys)
        types = ", ".join(_TAG_TEXT[t] for t in node.types)
        return f"EXTRACT(l={render_plan(node.input)}, attr_names=[{keys}], attr_types=[{types}])"
    if isinstance(node, Join):
        cond = render_pred(node.condition)
        return (
            f"JOIN(l1={render_plan(node.left)}, l2={render_plan(node.right)}, "
            f"condition={quote(cond)})"
        )
    if isinstance(node, GroupBy):
        keys = ", ".join(quote(k) for k in node.keys)
        return f"GROUP_BY(l={render_plan(node.input)}, attr_names=[{keys}])"
    if isinstance(node, Filter):
        return f"FILTER(l={render_plan(node.input)}, filter=lambda attr: {render_pred(node.predicate)})"
    if isinstance(node, Map):
        base = f"MAP(l={render_plan(node.input)}, fct={_render_fn(node.fn)}"
        if node.res_name != "map_result":
            base += f", res_name={quote(node.res_name)}"
        return base + ")"
    if isinstance(node, Apply):
        return f"APPLY(l={render_plan(node.input)}, fct={_render_fn(node.fn)})"
    if isinstance(node, Unnest):
        return (
            f"UNNEST(l={render_plan(node.input)}, nested_attr_name={quote(node.nested_key)}, "
            f"unnested_attr_name={quote(node.unnested_key)})"
        )
    if isinstance(node, ArgExtremum):
        base = (
            f"ARG{node.mode.upper()}(l={render_plan(node.input)}, "
            f"arg_attr_name={quote(node.arg_key)}"
        )
        if node.val_key is not None:
            base += f", val_attr_name={quote(node.val_key)}"
        return base + ")"
    if isinstance(node, Aggregate):
        return f"{node.mode.upper()}(l={render_plan(node.input)}, attr_name={quote(node.key)})"
    raise TypeError(f"not a plan node: {node!r}")


def _render_fn(fn: FnExpr) -> str:
    if not fn.bindings:
        return fn.name
    parts = ", ".join(f"{k}={quote(v)}" for k, v in fn.bindings)
    return f"{fn.name}({parts})"


# Precedence levels for predicate rendering (higher binds tighter).
_PREC_OR = 1
_PREC_AND = 2
_PREC_NOT = 3
_PREC_CMP = 4
_PREC_ARITH = 5
_PREC_ATOM = 6


def render_pred(expr: PredExpr) -> str:
    text, _ = _pred(expr)
    return text


def _paren(inner: str, inner_prec: int, outer_prec: int) -> str:
    return f"({inner})" if inner_prec < outer_prec else inner


def _pred(expr: PredExpr) -> tuple:
    if isinstance(expr, Attr):
        if expr.side:
            return f"{expr.side}.{expr.key}", _PREC_ATOM
        return f'attr[{quote(expr.key)}]', _PREC_ATOM
    if isinstance(expr, Literal):
        if isinstance(expr.value, str):
            return quote(expr.value), _PREC_ATOM
        return repr(expr.value), _PREC_ATOM
    if isinstance(expr, Today):
        return "date.today()", _PREC_ATOM
    if isinstance(expr, DateShift):
        base_text, base_prec = _pred(expr.base)
        parts = []
        for unit in ("years", "months", "days"):
            amount = getattr(expr.period, unit)
            if amount:
                parts.append(f"{unit}={amount}")
        if not parts:
            parts.append("days=0")
        delta = f"relativedelta({', '.join(parts)})"
        return f"({_paren(base_text, base_prec, _PREC_ARITH)} - {delta})", _PREC_ATOM
    if isinstance(expr, Lower):
        inner, prec = _pred(expr.operand)
        return f"{_paren(inner, prec, _PREC_ATOM)}.lower()", _PREC_ATOM
    if isinstance(expr, CalAccess):
        inner, prec = _pred(expr.base)
        return f"{_paren(inner, prec, _PREC_ATOM)}.{expr.fieldname}", _PREC_ATOM
    if isinstance(expr, SubPlanScalar):
        return f"{render_plan(expr.plan)}.result", _PREC_ATOM
    if isinstance(expr, AnyContains):
        target = f"{expr.side}.{expr.list_key}" if expr.side else f"attr[{quote(expr.list_key)}]"
        return (
            f"any({quote(expr.needle)} in p.lower() for p in {target})",
            _PREC_ATOM,
        )
    if isinstance(expr, Contains):
        needle, nprec = _pred(expr.needle)
        haystack, hprec = _pred(expr.haystack)
        text = f"{_paren(needle, nprec, _PREC_CMP + 1)} in {_paren(haystack, hprec, _PREC_CMP + 1)}"
        return text, _PREC_CMP
    if isinstance(expr, Cmp):
        left, lprec = _pred(expr.left)
        right, rprec = _pred(expr.right)
        text = f"{_paren(left, lprec, _PREC_CMP + 1)} {expr.op} {_paren(right, rprec, _PREC_CMP + 1)}"
        return text, _PREC_CMP
    if isinstance(expr, Not):
        inner, prec = _pred(expr.operand)
        return f"not {_paren(inner, prec, _PREC_NOT)}", _PREC_NOT
    if isinstance(expr, BoolOp):
        prec = _PREC_AND if expr.op == "and" else _PREC_OR
        parts = []
        for operand in expr.operands:
            inner, inner_prec = _pred(operand)
            parts.append(_paren(inner, inner_prec, prec + 1))
        return f" {expr.op} ".join(parts), prec
    raise TypeError(f"not a predicate expression: {expr!r}")
