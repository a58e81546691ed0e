"""Parser for the operator-tree plan language.

Plan text is a single expression in a Python-shaped surface syntax, e.g.::

    SUM(l=QUD("my online purchases in March 2022 with amounts"),
        attr_name="amount_spent")

The text is parsed with the stdlib ``ast`` module and compiled against a
strict whitelist into the closed plan/predicate AST; nothing is ever
evaluated as Python. Operator arguments are keyword-only (QUD's single
question argument is the one positional form, matching common usage);
``filter=lambda attr: ...`` is accepted as concrete syntax for predicates,
with the lambda header discarded.
"""

from __future__ import annotations

import ast
import warnings
from typing import Optional

from .nodes import (
    Aggregate,
    AnyContains,
    Apply,
    ArgExtremum,
    Attr,
    BoolOp,
    CAL_FIELDS,
    CalAccess,
    Cmp,
    Contains,
    DateShift,
    Extract,
    Filter,
    FN_REGISTRY,
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
    TypeTag,
    Unnest,
)


class PlanSyntaxError(Exception):
    """Any failure to turn text into a plan; always positioned."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class PlanArityError(PlanSyntaxError):
    """Wrong operator arity: missing, duplicate, unexpected or positional args."""


class UnknownFunctionError(PlanSyntaxError):
    """Operator or function name not in the registry."""


_CMP_OPS = {
    ast.Eq: "==",
    ast.NotEq: "!=",
    ast.Lt: "<",
    ast.LtE: "<=",
    ast.Gt: ">",
    ast.GtE: ">=",
}

_TYPE_TAG_NAMES = {
    "str": TypeTag.STR,
    "int": TypeTag.INT,
    "float": TypeTag.FLOAT,
    "list": TypeTag.LIST,
}

_TYPE_TAG_PATHS = {
    ("date", "fromisoformat"): TypeTag.DATE,
    ("time", "fromisoformat"): TypeTag.TIME,
    ("datetime", "fromisoformat"): TypeTag.DATETIME,
    ("datetime", "fromtimestamp"): TypeTag.DATETIME,
}

_OPERATORS = {
    "QUD",
    "RETRIEVE",
    "EXTRACT",
    "JOIN",
    "GROUP_BY",
    "FILTER",
    "MAP",
    "APPLY",
    "UNNEST",
    "ARGMIN",
    "ARGMAX",
    "SUM",
    "AVG",
    "MIN",
    "MAX",
}


def parse_plan(text: str) -> PlanNode:
    """Parse plan text into a PlanNode; raises PlanSyntaxError on any failure."""
    try:
        with warnings.catch_warnings():
            # plan text is data; bad escape sequences fail cleanly, never warn
            warnings.simplefilter("ignore")
            tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise PlanSyntaxError(exc.msg or "invalid syntax", exc.lineno or 0, exc.offset or 0)
    except (ValueError, MemoryError, RecursionError) as exc:
        raise PlanSyntaxError(str(exc), 1, 1)
    try:
        return _compile_plan(tree.body)
    except RecursionError:
        raise PlanSyntaxError("expression nesting too deep", 1, 1)


def parse_condition(text: str, line: int = 0, col: int = 0) -> PredExpr:
    """Parse a join-condition string (an expression over ``i1``/``i2``)."""
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise PlanSyntaxError(f"in join condition: {exc.msg}", line, col)
    except (ValueError, MemoryError, RecursionError) as exc:
        raise PlanSyntaxError(f"in join condition: {exc}", line, col)
    return _compile_pred(tree.body, env=_PredEnv(attr_name=None, join_sides=("i1", "i2")))


def _pos(node: ast.AST) -> tuple:
    return (getattr(node, "lineno", 0), getattr(node, "col_offset", -1) + 1)


def _fail(node: ast.AST, message: str, cls=PlanSyntaxError):
    line, col = _pos(node)
    raise cls(message, line, col)


# ---------------------------------------------------------------------------
# Plan compilation
# ---------------------------------------------------------------------------


class _Args:
    """Keyword arguments of one operator call, consumed one by one."""

    def __init__(self, call: ast.Call, name: str):
        self.call = call
        self.name = name
        self.kwargs: dict[str, ast.expr] = {}
        for kw in call.keywords:
            if kw.arg is None:
                _fail(call, f"{name} does not accept **kwargs", PlanArityError)
            if kw.arg in self.kwargs:
                _fail(call, f"duplicate argument {kw.arg!r} in {name}", PlanArityError)
            self.kwargs[kw.arg] = kw.value

    def require(self, key: str) -> ast.expr:
        if key not in self.kwargs:
            _fail(self.call, f"{self.name} requires argument {key!r}", PlanArityError)
        return self.kwargs.pop(key)

    def optional(self, key: str) -> Optional[ast.expr]:
        return self.kwargs.pop(key, None)

    def finish(self) -> None:
        if self.kwargs:
            extra = ", ".join(sorted(self.kwargs))
            _fail(self.call, f"unexpected argument(s) for {self.name}: {extra}", PlanArityError)


def _compile_plan(node: ast.expr) -> PlanNode:
    if not isinstance(node, ast.Call):
        _fail(node, "expected an operator call")
    if not isinstance(node.func, ast.Name):
        _fail(node, "operator name must be a plain identifier")
    name = node.func.id
    if name not in _OPERATORS:
        _fail(node, f"unknown operator: {name}", UnknownFunctionError)

    if name == "QUD":
        return _compile_qud(node)
    if node.args:
        _fail(node, f"{name} takes keyword arguments only", PlanArityError)
    args = _Args(node, name)
    pos = _pos(node)

    if name == "RETRIEVE":
        query = _string(args.require("query"))
        input_ast = args.optional("l")
        args.finish()
        input_plan = _compile_plan(input_ast) if input_ast is not None else None
        return Retrieve(query=query, input=input_plan, pos=pos)

    if name == "EXTRACT":
        source = _compile_plan(args.require("l"))
        keys = _string_list(args.require("attr_names"))
        types = _type_list(args.require("attr_types"))
        args.finish()
        return Extract(input=source, keys=keys, types=types, pos=pos)

    if name == "JOIN":
        left = _compile_plan(args.require("l1"))
        right = _compile_plan(args.require("l2"))
        cond_ast = args.require("condition")
        args.finish()
        cond_text = _string(cond_ast)
        condition = parse_condition(cond_text, *_pos(cond_ast))
        return Join(left=left, right=right, condition=condition, pos=pos)

    if name == "GROUP_BY":
        source = _compile_plan(args.require("l"))
        keys = _string_list(args.require("attr_names"))
        args.finish()
        return GroupBy(input=source, keys=keys, pos=pos)

    if name == "FILTER":
        source = _compile_plan(args.require("l"))
        pred_ast = args.require("filter")
        args.finish()
        predicate = _compile_filter_lambda(pred_ast)
        return Filter(input=source, predicate=predicate, pos=pos)

    if name == "MAP":
        source = _compile_plan(args.require("l"))
        fn = _compile_fn(args.require("fct"))
        res_ast = args.optional("res_name")
        args.finish()
        res_name = _string(res_ast) if res_ast is not None else "map_result"
        return Map(input=source, fn=fn, res_name=res_name, pos=pos)

    if name == "APPLY":
        source = _compile_plan(args.require("l"))
        fn = _compile_fn(args.require("fct"))
        args.finish()
        return Apply(input=source, fn=fn, pos=pos)

    if name == "UNNEST":
        source = _compile_plan(args.require("l"))
        nested = _string(args.require("nested_attr_name"))
        unnested = _string(args.require("unnested_attr_name"))
        args.finish()
        return Unnest(input=source, nested_key=nested, unnested_key=unnested, pos=pos)

    if name in ("ARGMIN", "ARGMAX"):
        source = _compile_plan(args.require("l"))
        arg_key = _string(args.require("arg_attr_name"))
        val_ast = args.optional("val_attr_name")
        args.finish()
        val_key = _string(val_ast) if val_ast is not None else None
        return ArgExtremum(
            input=source, mode=name[3:].lower(), arg_key=arg_key, val_key=val_key, pos=pos
        )

    # SUM / AVG / MIN / MAX
    source = _compile_plan(args.require("l"))
    key = _string(args.require("attr_name"))
    args.finish()
    return Aggregate(input=source, mode=name.lower(), key=key, pos=pos)


def _compile_qud(node: ast.Call) -> QudCall:
    if node.args and not node.keywords and len(node.args) == 1:
        return QudCall(question=_string(node.args[0]), pos=_pos(node))
    if node.keywords and not node.args:
        args = _Args(node, "QUD")
        question = _string(args.require("question"))
        args.finish()
        return QudCall(question=question, pos=_pos(node))
    _fail(node, "QUD takes exactly one question", PlanArityError)


def _string(node: ast.expr) -> str:
    if isinstance(node, ast.Constant) and isinstance(node.value, str):
        return node.value
    _fail(node, "expected a string literal")


def _string_list(node: ast.expr) -> tuple:
    if not isinstance(node, (ast.List, ast.Tuple)):
        _fail(node, "expected a list of strings")
    return tuple(_string(elt) for elt in node.elts)


def _type_list(node: ast.expr) -> tuple:
    if not isinstance(node, (ast.List, ast.Tuple)):
        _fail(node, "expected a list of type tags")
    return tuple(_type_tag(elt) for elt in node.elts)


def _type_tag(node: ast.expr) -> TypeTag:
    if isinstance(node, ast.Name) and node.id in _TYPE_TAG_NAMES:
        return _TYPE_TAG_NAMES[node.id]
    if (
        isinstance(node, ast.Attribute)
        and isinstance(node.value, ast.Name)
        and (node.value.id, node.attr) in _TYPE_TAG_PATHS
    ):
        return _TYPE_TAG_PATHS[(node.value.id, node.attr)]
    _fail(node, "unknown attribute type tag")


def _compile_fn(node: ast.expr) -> FnExpr:
    if isinstance(node, ast.Name):
        if node.id not in FN_REGISTRY:
            _fail(node, f"unknown function: {node.id}", UnknownFunctionError)
        return FnExpr(name=node.id)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        name = node.func.id
        if name not in FN_REGISTRY:
            _fail(node, f"unknown function: {name}", UnknownFunctionError)
        if node.args:
            _fail(node, f"function {name} takes keyword bindings only", PlanArityError)
        allowed = FN_REGISTRY[name]
        bindings = []
        for kw in node.keywords:
            if kw.arg is None or kw.arg not in allowed:
                _fail(node, f"function {name} does not accept binding {kw.arg!r}", PlanArityError)
            bindings.append((kw.arg, _string(kw.value)))
        return FnExpr(name=name, bindings=tuple(bindings))
    _fail(node, "expected a function name")


# ---------------------------------------------------------------------------
# Predicate compilation
# ---------------------------------------------------------------------------


class _PredEnv:
    """Names visible inside a predicate: the lambda handle or the join sides."""

    def __init__(self, attr_name: Optional[str], join_sides: tuple = ()):
        self.attr_name = attr_name
        self.join_sides = join_sides


def _compile_filter_lambda(node: ast.expr) -> PredExpr:
    if not isinstance(node, ast.Lambda):
        _fail(node, "filter must be written as `lambda attr: <expression>`")
    params = node.args
    if (
        len(params.args) != 1
        or params.posonlyargs
        or params.kwonlyargs
        or params.vararg
        or params.kwarg
        or params.defaults
    ):
        _fail(node, "filter lambda takes exactly one argument", PlanArityError)
    env = _PredEnv(attr_name=params.args[0].arg)
    return _compile_pred(node.body, env)


def _compile_pred(node: ast.expr, env: _PredEnv) -> PredExpr:
    if isinstance(node, ast.BoolOp):
        op = "and" if isinstance(node.op, ast.And) else "or"
        return BoolOp(op=op, operands=tuple(_compile_pred(v, env) for v in node.values))

    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.Not):
        return Not(operand=_compile_pred(node.operand, env))

    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        inner = _compile_pred(node.operand, env)
        if isinstance(inner, Literal) and isinstance(inner.value, (int, float)):
            return Literal(-inner.value)
        _fail(node, "unary minus applies to number literals only")

    if isinstance(node, ast.Compare):
        return _compile_compare(node, env)

    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, ast.Sub):
            _fail(node, "only `-` date arithmetic is supported")
        period = _compile_period(node.right)
        return DateShift(base=_compile_pred(node.left, env), period=period)

    if isinstance(node, ast.Constant):
        if isinstance(node.value, (str, bool, int, float)):
            return Literal(node.value)
        _fail(node, f"unsupported literal: {node.value!r}")

    if isinstance(node, ast.Subscript):
        return _compile_attr_ref(node, env)

    if isinstance(node, ast.Attribute):
        # i1.key / i2.key, calendar accessors, or `<plan>.result`
        if (
            isinstance(node.value, ast.Name)
            and node.value.id in env.join_sides
        ):
            return Attr(key=node.attr, side=node.value.id)
        if node.attr == "result":
            return SubPlanScalar(plan=_compile_plan(node.value))
        if node.attr in CAL_FIELDS:
            return CalAccess(base=_compile_pred(node.value, env), fieldname=node.attr)
        _fail(node, f"unsupported attribute access: .{node.attr}")

    if isinstance(node, ast.Call):
        return _compile_pred_call(node, env)

    _fail(node, f"unsupported expression: {type(node).__name__}")


def _compile_compare(node: ast.Compare, env: _PredEnv) -> PredExpr:
    operands = [node.left] + list(node.comparators)
    parts = []
    for op, left_ast, right_ast in zip(node.ops, operands, operands[1:]):
        if isinstance(op, ast.In):
            parts.append(
                Contains(
                    needle=_compile_pred(left_ast, env),
                    haystack=_compile_pred(right_ast, env),
                )
            )
        elif type(op) in _CMP_OPS:
            parts.append(
                Cmp(
                    op=_CMP_OPS[type(op)],
                    left=_compile_pred(left_ast, env),
                    right=_compile_pred(right_ast, env),
                )
            )
        else:
            _fail(node, f"unsupported comparison: {type(op).__name__}")
    if len(parts) == 1:
        return parts[0]
    return BoolOp(op="and", operands=tuple(parts))


def _compile_attr_ref(node: ast.Subscript, env: _PredEnv) -> Attr:
    base = node.value
    index = node.slice
    if not (isinstance(base, ast.Name) and base.id == env.attr_name):
        _fail(node, "subscripts must read from the filter argument")
    if isinstance(index, ast.Constant) and isinstance(index.value, str):
        return Attr(key=index.value)
    _fail(node, "attribute keys must be string literals")


def _compile_pred_call(node: ast.Call, env: _PredEnv) -> PredExpr:
    func = node.func
    # date.today()
    if (
        isinstance(func, ast.Attribute)
        and isinstance(func.value, ast.Name)
        and func.value.id == "date"
        and func.attr == "today"
        and not node.args
        and not node.keywords
    ):
        return Today()
    # x.lower()
    if isinstance(func, ast.Attribute) and func.attr == "lower" and not node.args:
        return Lower(operand=_compile_pred(func.value, env))
    # x.weekday()
    if isinstance(func, ast.Attribute) and func.attr in CAL_FIELDS and not node.args:
        return CalAccess(base=_compile_pred(func.value, env), fieldname=func.attr)
    # any(<needle> in p.lower() for p in attr["k"])
    if isinstance(func, ast.Name) and func.id == "any":
        return _compile_any(node, env)
    _fail(node, "unsupported call in predicate")


def _compile_any(node: ast.Call, env: _PredEnv) -> AnyContains:
    if len(node.args) != 1 or node.keywords or not isinstance(node.args[0], ast.GeneratorExp):
        _fail(node, "any() must wrap a single generator expression")
    gen = node.args[0]
    if len(gen.generators) != 1 or gen.generators[0].ifs or gen.generators[0].is_async:
        _fail(node, "any() supports one plain `for` clause")
    comp = gen.generators[0]
    if not isinstance(comp.target, ast.Name):
        _fail(node, "any() loop variable must be a name")
    var = comp.target.id

    source = comp.iter
    if isinstance(source, ast.Subscript):
        ref = _compile_attr_ref(source, env)
        list_key, side = ref.key, None
    elif (
        isinstance(source, ast.Attribute)
        and isinstance(source.value, ast.Name)
        and source.value.id in env.join_sides
    ):
        list_key, side = source.attr, source.value.id
    else:
        _fail(node, "any() must iterate over an attribute list")

    elt = gen.elt
    if not (
        isinstance(elt, ast.Compare)
        and len(elt.ops) == 1
        and isinstance(elt.ops[0], ast.In)
    ):
        _fail(node, "any() body must be `<text> in <member>`")
    needle_ast, member_ast = elt.left, elt.comparators[0]
    if not (isinstance(needle_ast, ast.Constant) and isinstance(needle_ast.value, str)):
        _fail(node, "any() needle must be a string literal")
    if (
        isinstance(member_ast, ast.Call)
        and isinstance(member_ast.func, ast.Attribute)
        and member_ast.func.attr == "lower"
        and not member_ast.args
        and not member_ast.keywords
    ):
        member_ast = member_ast.func.value
    if not (isinstance(member_ast, ast.Name) and member_ast.id == var):
        _fail(node, "any() body must test the loop variable")
    return AnyContains(list_key=list_key, needle=needle_ast.value, side=side)


def _compile_period(node: ast.expr) -> Period:
    if not (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id == "relativedelta"
        and not node.args
    ):
        _fail(node, "date arithmetic must subtract a relativedelta(...)")
    parts = {"years": 0, "months": 0, "days": 0}
    for kw in node.keywords:
        if kw.arg not in parts:
            _fail(node, f"relativedelta does not accept {kw.arg!r}")
        if not (isinstance(kw.value, ast.Constant) and isinstance(kw.value.value, int)):
            _fail(node, "relativedelta parts must be integer literals")
        parts[kw.arg] = kw.value.value
    return Period(**parts)
