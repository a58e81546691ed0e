"""Cross-module invariants probed on generated data."""

from datetime import datetime

from reqap.bench import run_benchmark
from reqap.engine import ExtractionBundle, RetrievalBundle, execute, make_context
from reqap.events import EventStore
from reqap.extraction import ExtractConfig, RuleBasedGenerator, extract
from reqap.decompose import ScriptedDecomposer, resolve
from reqap.persona.dataset import load_dataset
from reqap.plan.nodes import TypeTag
from reqap.retrieval import LexicalScorer, OracleClassifiers
from reqap.runner import bench_questions, build_runner


def _oracle_context(store, question, user_info, scorer=None):
    oracle = OracleClassifiers(question.retrieve_gold)
    return make_context(
        store,
        clock=datetime(2023, 1, 1),
        retrieval=RetrievalBundle(
            scorer=scorer or LexicalScorer(store),
            pattern_classifier=oracle,
            event_classifier=oracle,
        ),
        extraction=ExtractionBundle(generator=RuleBasedGenerator(), user_info=user_info),
    )


def test_provenance_supports_answer_on_fifty_questions(mini_dataset):
    """Dropping any single non-provenance event leaves the scalar answer unchanged.

    (Removing all of them at once is not answer-preserving by design: the
    sparse scorer's corpus statistics would change wholesale.)
    """
    import random

    directory, _ = mini_dataset
    rng = random.Random(8080)
    checked = 0
    for persona_dataset in load_dataset(directory):
        store = persona_dataset.store
        scorer = LexicalScorer(store)
        for question in persona_dataset.questions():
            if checked >= 50:
                break
            plan = resolve(question.question, ScriptedDecomposer(question.script))
            ctx = _oracle_context(store, question, persona_dataset.user_info, scorer)
            result = execute(plan, ctx)
            if result.kind != "scalar":
                continue
            assert result.provenance <= {e.id for e in store}
            others = [e.id for e in store if e.id not in result.provenance]
            for removed in rng.sample(others, min(2, len(others))):
                trimmed = EventStore([e for e in store if e.id != removed])
                ctx2 = _oracle_context(trimmed, question, persona_dataset.user_info)
                assert execute(plan, ctx2).value == result.value, (
                    question.question,
                    removed,
                )
            checked += 1
    assert checked >= 50


def test_report_totals_reproducible(mini_dataset):
    """Same dataset and config: identical verdicts, per-tag tables and answers."""
    directory, _ = mini_dataset
    persona_dataset = load_dataset(directory)[0]
    questions = bench_questions(persona_dataset.questions())

    def verdicts():
        runner = build_runner(
            persona_dataset.store,
            clock=datetime(2023, 1, 1),
            classifier_mode="oracle",
            user_info=persona_dataset.user_info,
        )
        report = run_benchmark(questions, runner)
        return (
            [(o.question, repr(o.predicted), o.strict, o.relaxed) for o in report.outcomes],
            report.per_tag(),
        )

    assert verdicts() == verdicts()


def test_frozen_equivalence_on_generated_purchases(mini_dataset):
    """Freezing changes no extracted values when the frozen key is universal."""
    directory, _ = mini_dataset
    persona_dataset = load_dataset(directory)[0]
    purchases = [
        e for e in persona_dataset.store if e.source.value == "online_purchase"
    ]
    assert len(purchases) > 60  # enough to cross the observation window
    frozen = extract(purchases, ["amount_spent"], [TypeTag.FLOAT],
                     generator=RuleBasedGenerator())
    plain = extract(purchases, ["amount_spent"], [TypeTag.FLOAT],
                    generator=RuleBasedGenerator(),
                    config=ExtractConfig(freeze_enabled=False))
    assert [e.get("amount_spent") for e in frozen] == [
        e.get("amount_spent") for e in plain
    ]
