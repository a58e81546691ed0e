"""Recursive question understanding: expand sub-question placeholders until none remain.

A decomposer maps one (sub-)question plus the decomposition history to a
partial plan, which may itself contain QUD placeholders. ``resolve`` expands
placeholders leftmost-outermost, threading each placeholder's own chain of
(question, plan) steps as its history, until the plan is fully resolved.
"""

from __future__ import annotations

import dataclasses
import json
import re
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .plan.nodes import (
    BoolOp,
    CalAccess,
    Cmp,
    Contains,
    DateShift,
    Filter,
    Join,
    Lower,
    Not,
    PlanNode,
    PredExpr,
    QudCall,
    Retrieve,
    SubPlanScalar,
)
from .plan.parser import PlanSyntaxError, parse_plan


class DecomposerMissError(Exception):
    """A scripted decomposer has no entry for the question."""


class UnparseablePlanError(Exception):
    def __init__(self, question: str, raw: str, cause: str = ""):
        super().__init__(f"plan for {question!r} does not parse: {cause}\n{raw}")
        self.question = question
        self.raw = raw


class DepthExceededError(Exception):
    def __init__(self, max_depth: int, question: str):
        super().__init__(f"decomposition exceeded depth {max_depth} at {question!r}")
        self.max_depth = max_depth


class Decomposer(Protocol):
    def step(self, question: str, history: Sequence[tuple]) -> str:
        """Return partial-plan text for the question; history is (q, plan) pairs."""


_WS_RE = re.compile(r"\s+")


def normalize_question(question: str) -> str:
    return _WS_RE.sub(" ", question).strip().lower()


class ScriptedDecomposer:
    """Deterministic lookup table from normalized questions to partial plans."""

    def __init__(self, script: dict):
        self._script = {normalize_question(q): plan for q, plan in script.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedDecomposer":
        return cls.from_lines(Path(path).read_text(encoding="utf-8").splitlines())

    @classmethod
    def from_lines(cls, lines: Sequence[str]) -> "ScriptedDecomposer":
        script = {}
        for line in lines:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ValueError(f"script line is not question<TAB>plan: {line!r}")
            question, plan = line.split("\t", 1)
            script[question] = plan
        return cls(script)

    def step(self, question: str, history: Sequence[tuple]) -> str:
        key = normalize_question(question)
        if key not in self._script:
            raise DecomposerMissError(f"no scripted plan for question: {question!r}")
        return self._script[key]


class GeneratorClient:
    """HTTP client for an external plan generator.

    Wire format: POST a UTF-8 JSON body ``{"question": ..., "history":
    [{"q": ..., "plan": ...}, ...]}``; the response is ``{"plan_text": ...}``.
    A response that does not parse as a plan is retried once, then rejected.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, max_retries: int = 1):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_retries = max_retries

    def _post(self, question: str, history: Sequence[tuple]) -> str:
        body = json.dumps(
            {
                "question": question,
                "history": [{"q": q, "plan": plan} for q, plan in history],
            }
        ).encode("utf-8")
        last_error: Optional[Exception] = None
        for _ in range(self.max_retries + 1):
            try:
                request = urllib.request.Request(
                    self.endpoint, data=body, headers={"Content-Type": "application/json"}
                )
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    payload = json.loads(response.read().decode("utf-8"))
                return str(payload["plan_text"])
            except Exception as exc:  # noqa: BLE001 - transport errors retried
                last_error = exc
        raise RuntimeError(f"generator endpoint failed: {last_error}")

    def step(self, question: str, history: Sequence[tuple]) -> str:
        text = self._post(question, history)
        try:
            parse_plan(text)
            return text
        except PlanSyntaxError as first_error:
            retry = self._post(question, history)
            try:
                parse_plan(retry)
                return retry
            except PlanSyntaxError:
                raise UnparseablePlanError(question, text, str(first_error))


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    question: str
    history: tuple
    plan_text: str


def resolve(question: str, decomposer: Decomposer, max_depth: int = 12) -> PlanNode:
    """Fully resolve a question into a plan with no QUD placeholders left."""
    plan, _ = resolve_with_steps(question, decomposer, max_depth)
    return plan


def resolve_with_steps(
    question: str, decomposer: Decomposer, max_depth: int = 12
) -> tuple:
    """Resolve and also return the ordered decomposition steps (for training)."""
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    steps: list[Step] = []
    plan = _expand(question, (), 1, decomposer, max_depth, steps)
    return plan, steps


def _expand(
    question: str,
    history: tuple,
    depth: int,
    decomposer: Decomposer,
    max_depth: int,
    steps: list,
) -> PlanNode:
    if depth > max_depth:
        raise DepthExceededError(max_depth, question)
    text = decomposer.step(question, history)
    try:
        plan = parse_plan(text)
    except PlanSyntaxError as exc:
        raise UnparseablePlanError(question, text, str(exc))
    steps.append(Step(question, history, text))
    child_history = history + ((question, text),)
    return _splice(plan, child_history, depth, decomposer, max_depth, steps)


def _splice(
    node: PlanNode,
    history: tuple,
    depth: int,
    decomposer: Decomposer,
    max_depth: int,
    steps: list,
) -> PlanNode:
    if isinstance(node, QudCall):
        return _expand(node.question, history, depth + 1, decomposer, max_depth, steps)

    def recurse(child: Optional[PlanNode]) -> Optional[PlanNode]:
        if child is None:
            return None
        return _splice(child, history, depth, decomposer, max_depth, steps)

    if isinstance(node, Retrieve):
        if node.input is None:
            return node
        return dataclasses.replace(node, input=recurse(node.input))
    if isinstance(node, Join):
        left = recurse(node.left)
        right = recurse(node.right)
        condition = _splice_pred(node.condition, history, depth, decomposer, max_depth, steps)
        return dataclasses.replace(node, left=left, right=right, condition=condition)
    if isinstance(node, Filter):
        source = recurse(node.input)
        predicate = _splice_pred(node.predicate, history, depth, decomposer, max_depth, steps)
        return dataclasses.replace(node, input=source, predicate=predicate)
    return dataclasses.replace(node, input=recurse(node.input))


def _splice_pred(
    expr: PredExpr,
    history: tuple,
    depth: int,
    decomposer: Decomposer,
    max_depth: int,
    steps: list,
) -> PredExpr:
    def recurse(sub: PredExpr) -> PredExpr:
        return _splice_pred(sub, history, depth, decomposer, max_depth, steps)

    if isinstance(expr, SubPlanScalar):
        return SubPlanScalar(
            plan=_splice(expr.plan, history, depth, decomposer, max_depth, steps)
        )
    if isinstance(expr, Cmp):
        return Cmp(op=expr.op, left=recurse(expr.left), right=recurse(expr.right))
    if isinstance(expr, BoolOp):
        return BoolOp(op=expr.op, operands=tuple(recurse(op) for op in expr.operands))
    if isinstance(expr, Not):
        return Not(operand=recurse(expr.operand))
    if isinstance(expr, Lower):
        return Lower(operand=recurse(expr.operand))
    if isinstance(expr, Contains):
        return Contains(needle=recurse(expr.needle), haystack=recurse(expr.haystack))
    if isinstance(expr, CalAccess):
        return CalAccess(base=recurse(expr.base), fieldname=expr.fieldname)
    if isinstance(expr, DateShift):
        return DateShift(base=recurse(expr.base), period=expr.period)
    return expr  # Attr, Literal, Today, AnyContains carry no sub-plans


# ---------------------------------------------------------------------------
# Training-pair harvesting
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    """One answered question with its decomposition steps and a verdict."""

    question: str
    steps: Sequence[Step]
    answer: object = None
    gold: object = None
    correct: bool = False


@dataclass(frozen=True)
class TrainingPair:
    question: str
    history: tuple
    plan_text: str


MAX_PLANS_PER_QUESTION = 3


def harvest_training_pairs(runs: Sequence[RunRecord]) -> list:
    """Step-wise (sub-question + history, partial plan) pairs from correct runs.

    At most three distinct plans are retained per question; pairs are
    deduplicated globally while preserving first-seen order.
    """
    kept_per_question: dict[str, list] = {}
    for run in runs:
        if not run.correct:
            continue
        signature = tuple(step.plan_text for step in run.steps)
        bucket = kept_per_question.setdefault(normalize_question(run.question), [])
        if any(sig == signature for sig, _ in bucket):
            continue
        if len(bucket) >= MAX_PLANS_PER_QUESTION:
            continue
        bucket.append((signature, run))

    pairs: list[TrainingPair] = []
    seen: set = set()
    for buckets in kept_per_question.values():
        for _, run in buckets:
            for step in run.steps:
                pair = TrainingPair(step.question, step.history, step.plan_text)
                if pair not in seen:
                    seen.add(pair)
                    pairs.append(pair)
    return pairs
