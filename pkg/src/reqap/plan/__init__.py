"""Operator-tree plan language: AST, parser, printer and validator."""

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
    Period,
    PlanNode,
    PredExpr,
    QudCall,
    Retrieve,
    SubPlanScalar,
    Today,
    TypeTag,
    Unnest,
    children,
    count_nodes,
    has_qud,
    walk,
)
from .parser import (
    PlanArityError,
    PlanSyntaxError,
    UnknownFunctionError,
    parse_condition,
    parse_plan,
)
from .printer import render_plan, render_pred
from .validator import Diagnostic, validate_plan

__all__ = [
    "Aggregate",
    "AnyContains",
    "Apply",
    "ArgExtremum",
    "Attr",
    "BoolOp",
    "CalAccess",
    "Cmp",
    "Contains",
    "DateShift",
    "Diagnostic",
    "Extract",
    "Filter",
    "FnExpr",
    "GroupBy",
    "Join",
    "Literal",
    "Lower",
    "Map",
    "Not",
    "Period",
    "PlanArityError",
    "PlanNode",
    "PlanSyntaxError",
    "PredExpr",
    "QudCall",
    "Retrieve",
    "SubPlanScalar",
    "Today",
    "TypeTag",
    "UnknownFunctionError",
    "Unnest",
    "children",
    "count_nodes",
    "has_qud",
    "parse_condition",
    "parse_plan",
    "render_plan",
    "render_pred",
    "validate_plan",
    "walk",
]
