import math
from datetime import date

import pytest

from reqap.bench import (
    BenchQuestion,
    BenchReport,
    NoDiscordantPairsError,
    hit_at_1,
    mcnemar,
    render_report_text,
    rlx_hit_at_1,
    run_benchmark,
    write_report,
)
from reqap.engine import TraceRecord, TraceRecorder


def test_strict_normalization():
    assert hit_at_1("Monday", "monday ") == 1
    assert hit_at_1(10.0, 10) == 1
    assert hit_at_1(10.0000000001, 10) == 1
    assert hit_at_1(date(2022, 1, 2), "2022-01-02") == 1
    assert hit_at_1("a", "b") == 0
    assert hit_at_1(None, 3) == 0


def test_relaxed_ten_percent_slack():
    assert (hit_at_1(109, 100), rlx_hit_at_1(109, 100)) == (0, 1)
    assert (hit_at_1(111, 100), rlx_hit_at_1(111, 100)) == (0, 0)
    assert rlx_hit_at_1(110, 100) == 1  # boundary inclusive
    assert rlx_hit_at_1(90, 100) == 1
    assert rlx_hit_at_1(89.9, 100) == 0


def test_relaxed_gold_zero_requires_zero():
    assert rlx_hit_at_1(0, 0) == 1
    assert rlx_hit_at_1(0.0, 0) == 1
    assert rlx_hit_at_1(1, 0) == 0


def test_relaxed_non_numeric_is_strict():
    assert rlx_hit_at_1("Monday", "monday") == 1
    assert rlx_hit_at_1("Tuesday", "monday") == 0
    assert rlx_hit_at_1(5, "monday") == 0


def test_strict_implies_relaxed_random():
    import random

    rng = random.Random(1)
    for _ in range(2000):
        gold = rng.choice((rng.randrange(-5, 5), rng.uniform(-2, 2), "text", date(2020, 1, 1)))
        pred = rng.choice((gold, rng.randrange(-5, 5), "other", None))
        assert rlx_hit_at_1(pred, gold) >= hit_at_1(pred, gold)


def test_mcnemar_exact_values():
    pairs = [(0, 1)] * 10  # b=0, c=10
    assert math.isclose(mcnemar(pairs), 2 / 1024, rel_tol=0, abs_tol=1e-12)
    assert mcnemar([(1, 0)] * 3 + [(0, 1)] * 3) == 1.0  # b == c caps at 1
    pairs = [(1, 0)] * 2 + [(0, 1)] * 8  # b=2, c=8
    assert math.isclose(mcnemar(pairs), 112 / 1024, abs_tol=1e-12)


def test_mcnemar_symmetric_and_guarded():
    pairs = [(1, 0)] * 4 + [(0, 1)] * 9 + [(1, 1)] * 5
    swapped = [(b, a) for a, b in pairs]
    assert mcnemar(pairs) == mcnemar(swapped)
    with pytest.raises(NoDiscordantPairsError):
        mcnemar([(1, 1), (0, 0)])


def _question(question, gold, tags=("aggregation",)):
    return BenchQuestion(question=question, gold=gold, tags=frozenset(tags))


def _runner_returning(answers):
    def run(question):
        value = answers[question.question]
        if isinstance(value, Exception):
            raise value
        trace = TraceRecorder()
        trace.add(TraceRecord("1", "apply", (3,), 1, 0.001, ()))
        return value, trace

    return run


def test_run_benchmark_all_correct():
    questions = [_question("a", 1), _question("b", 2)]
    report = run_benchmark(questions, _runner_returning({"a": 1, "b": 2}))
    assert report.hit_at_1 == 1.0


def test_run_benchmark_three_of_four():
    questions = [_question(q, 1) for q in "abcd"]
    report = run_benchmark(questions, _runner_returning({"a": 1, "b": 1, "c": 1, "d": 9}))
    assert report.hit_at_1 == 0.75


def test_failures_recorded_not_raised():
    questions = [_question("a", 1), _question("b", 2)]
    report = run_benchmark(
        questions, _runner_returning({"a": RuntimeError("boom"), "b": 2})
    )
    assert report.hit_at_1 == 0.5
    assert report.outcomes[0].error and "boom" in report.outcomes[0].error


def test_per_tag_averages_recompute():
    questions = [
        _question("a", 1, ("join",)),
        _question("b", 1, ("join", "temporal")),
        _question("c", 1, ("temporal",)),
    ]
    report = run_benchmark(questions, _runner_returning({"a": 1, "b": 0, "c": 1}))
    table = report.per_tag()
    # recompute from raw outcomes
    for tag, row in table.items():
        outcomes = [o for o in report.outcomes if tag in o.tags]
        assert row["questions"] == len(outcomes)
        assert row["hit_at_1"] == sum(o.strict for o in outcomes) / len(outcomes)
    assert table["join"]["hit_at_1"] == 0.5


def test_rlx_never_below_strict_in_report():
    questions = [_question("a", 100), _question("b", 100)]
    report = run_benchmark(questions, _runner_returning({"a": 109, "b": 100}))
    assert report.rlx_hit_at_1 >= report.hit_at_1


def test_report_files_and_figures(tmp_path):
    questions = [_question("a", 1), _question("b", 2, ("join",))]
    report = run_benchmark(questions, _runner_returning({"a": 1, "b": 2}))
    artifacts = write_report(report, tmp_path / "report")
    base = tmp_path / "report"
    assert (base / "report.json").exists()
    assert (base / "questions.csv").exists()
    assert (base / "summary.txt").exists()
    figures = list((base / "figures").glob("*.png"))
    assert len(figures) == 2
    text = render_report_text(report)
    assert "Hit@1" in text and "operator" in text
    import csv

    with (base / "questions.csv").open() as handle:
        rows = list(csv.reader(handle))
    assert len(rows) == 3  # header + 2 questions


def test_operator_stats_shape():
    report = BenchReport(operator_timings={"retrieve": [0.2, 0.4], "sum": [0.001]})
    stats = report.operator_stats()
    assert stats["retrieve"]["mean_s"] == pytest.approx(0.3)
    assert stats["retrieve"]["median_s"] == pytest.approx(0.3)
    assert stats["sum"]["calls"] == 1
