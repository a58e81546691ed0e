"""Glue between datasets and the engine: per-question execution for benchmarks."""

from __future__ import annotations

from datetime import datetime
from typing import Optional

from .bench import BenchQuestion
from .decompose import ScriptedDecomposer, resolve
from .engine import (
    ExecutionResult,
    ExtractionBundle,
    RetrievalBundle,
    execute,
    make_context,
)
from .events import EventStore
from .extraction import RuleBasedGenerator
from .retrieval import LexicalClassifiers, LexicalScorer, OracleClassifiers, RetrievalConfig

LEXICAL = "lexical"
ORACLE = "oracle"


def answer_of(result: ExecutionResult) -> object:
    """Collapse an execution result into a comparable answer value."""
    if result.kind == "scalar":
        return result.value
    if result.kind == "events":
        return [event.id for event in result.events]
    return [group.key_values for group in result.groups]


def bench_questions(instances: list, persona_id: str = "") -> list:
    return [
        BenchQuestion(
            question=q.question,
            gold=q.gold,
            tags=q.tags,
            structured_only=q.structured_only,
            persona_id=q.persona_id or persona_id,
            script=q.script,
            retrieve_gold=q.retrieve_gold,
        )
        for q in instances
    ]


def build_runner(
    store: EventStore,
    clock: datetime,
    classifier_mode: str = ORACLE,
    user_info: str = "",
    cfg: Optional[RetrievalConfig] = None,
    scorer: Optional[LexicalScorer] = None,
):
    """A bench runner over one persona store; the scorer index is shared."""
    cfg = cfg or RetrievalConfig()
    scorer = scorer or LexicalScorer(store)
    lexical = LexicalClassifiers()

    def run(question: BenchQuestion):
        decomposer = ScriptedDecomposer(question.script)
        plan = resolve(question.question, decomposer)
        if classifier_mode == ORACLE:
            oracle = OracleClassifiers(question.retrieve_gold)
            pattern_classifier, event_classifier = oracle, oracle
        else:
            pattern_classifier, event_classifier = lexical, lexical
        ctx = make_context(
            store,
            clock=clock,
            retrieval=RetrievalBundle(
                cfg=cfg,
                scorer=scorer,
                pattern_classifier=pattern_classifier,
                event_classifier=event_classifier,
            ),
            extraction=ExtractionBundle(
                generator=RuleBasedGenerator(), user_info=user_info
            ),
        )
        result = execute(plan, ctx)
        return answer_of(result), ctx.trace

    return run
