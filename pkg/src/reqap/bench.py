"""Evaluation harness: answer matching, significance, runtime accounting, reports.

Strict Hit@1 compares normalized answers (numbers as reals with 1e-9
tolerance, text case-insensitively, temporal values in ISO form); the relaxed
variant grants numeric answers a +/-10% slack. Reports aggregate
micro-averages, per-complexity-tag tables and per-operator runtimes, and are
written as JSON + CSV alongside rendered figures.
"""

from __future__ import annotations

import csv
import json
import time as _time
from dataclasses import dataclass, field
from datetime import date, datetime, time
from math import comb
from pathlib import Path
from statistics import mean, median
from typing import Callable, Optional, Sequence

from .engine import TraceRecorder
from .values import Value, value_to_text

NUMERIC_TOLERANCE = 1e-9
RELAXED_SLACK = 0.1


class NoDiscordantPairsError(Exception):
    pass


def _is_number(value: object) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def normalize_answer(value: Value):
    if value is None:
        return None
    if _is_number(value):
        return float(value)
    if isinstance(value, str):
        return value.strip().lower()
    if isinstance(value, (date, time, datetime)):
        return value_to_text(value)
    if isinstance(value, list):
        return tuple(sorted(map(repr, (normalize_answer(v) for v in value))))
    return value_to_text(value)


def hit_at_1(pred: Value, gold: Value) -> int:
    a, b = normalize_answer(pred), normalize_answer(gold)
    if a is None or b is None:
        return 0
    if isinstance(a, float) and isinstance(b, float):
        return int(abs(a - b) <= NUMERIC_TOLERANCE)
    return int(a == b)


def rlx_hit_at_1(pred: Value, gold: Value) -> int:
    """Numeric answers within +/-10% of gold count as hits; gold 0 needs 0."""
    if _is_number(gold):
        if not _is_number(pred):
            return 0
        g, p = float(gold), float(pred)
        if g == 0:
            return int(abs(p) <= NUMERIC_TOLERANCE)
        return int(abs(p - g) <= RELAXED_SLACK * abs(g))
    return hit_at_1(pred, gold)


def mcnemar(pairs: Sequence) -> float:
    """Exact binomial McNemar p-value on discordant verdict pairs, capped at 1."""
    b = sum(1 for first, second in pairs if first and not second)
    c = sum(1 for first, second in pairs if second and not first)
    n = b + c
    if n == 0:
        raise NoDiscordantPairsError("no discordant pairs")
    k = min(b, c)
    tail = sum(comb(n, i) for i in range(k + 1))
    p = 2.0 * tail / (2.0**n)
    return min(1.0, p)


# ---------------------------------------------------------------------------
# Benchmark runs
# ---------------------------------------------------------------------------


@dataclass
class BenchQuestion:
    question: str
    gold: Value
    tags: frozenset
    structured_only: bool = False
    persona_id: str = ""
    script: dict = field(default_factory=dict)
    retrieve_gold: dict = field(default_factory=dict)


@dataclass
class QuestionOutcome:
    question: str
    persona_id: str
    predicted: Optional[Value]
    gold: Value
    strict: int
    relaxed: int
    tags: frozenset
    structured_only: bool
    elapsed_s: float
    error: Optional[str] = None


@dataclass
class BenchReport:
    outcomes: list = field(default_factory=list)
    operator_timings: dict = field(default_factory=dict)  # operator -> [seconds]

    @property
    def hit_at_1(self) -> float:
        return mean(o.strict for o in self.outcomes) if self.outcomes else 0.0

    @property
    def rlx_hit_at_1(self) -> float:
        return mean(o.relaxed for o in self.outcomes) if self.outcomes else 0.0

    def per_tag(self) -> dict:
        table: dict[str, dict] = {}
        for outcome in self.outcomes:
            for tag in sorted(outcome.tags):
                row = table.setdefault(tag, {"questions": 0, "strict": 0, "relaxed": 0})
                row["questions"] += 1
                row["strict"] += outcome.strict
                row["relaxed"] += outcome.relaxed
        return {
            tag: {
                "questions": row["questions"],
                "hit_at_1": row["strict"] / row["questions"],
                "rlx_hit_at_1": row["relaxed"] / row["questions"],
            }
            for tag, row in table.items()
        }

    def subset(self, predicate: Callable[[QuestionOutcome], bool]) -> "BenchReport":
        return BenchReport(
            outcomes=[o for o in self.outcomes if predicate(o)],
            operator_timings=self.operator_timings,
        )

    def operator_stats(self) -> dict:
        return {
            operator: {
                "calls": len(timings),
                "mean_s": mean(timings),
                "median_s": median(timings),
            }
            for operator, timings in sorted(self.operator_timings.items())
        }

    def latency_stats(self) -> dict:
        latencies = [o.elapsed_s for o in self.outcomes]
        if not latencies:
            return {"mean_s": 0.0, "median_s": 0.0}
        return {"mean_s": mean(latencies), "median_s": median(latencies)}


Runner = Callable[[BenchQuestion], tuple]


def run_benchmark(questions: Sequence[BenchQuestion], runner: Runner) -> BenchReport:
    """Run every question; failures score 0 and are recorded, never fatal."""
    report = BenchReport()
    for bench_question in questions:
        started = _time.perf_counter()
        predicted: Optional[Value] = None
        error: Optional[str] = None
        trace: Optional[TraceRecorder] = None
        try:
            predicted, trace = runner(bench_question)
        except Exception as exc:  # noqa: BLE001 - per-question isolation
            error = f"{type(exc).__name__}: {exc}"
        elapsed = _time.perf_counter() - started
        strict = hit_at_1(predicted, bench_question.gold) if error is None else 0
        relaxed = rlx_hit_at_1(predicted, bench_question.gold) if error is None else 0
        report.outcomes.append(
            QuestionOutcome(
                question=bench_question.question,
                persona_id=bench_question.persona_id,
                predicted=predicted,
                gold=bench_question.gold,
                strict=strict,
                relaxed=relaxed,
                tags=bench_question.tags,
                structured_only=bench_question.structured_only,
                elapsed_s=elapsed,
                error=error,
            )
        )
        if trace is not None:
            for record in trace.records:
                report.operator_timings.setdefault(record.operator, []).append(
                    record.elapsed_s
                )
    return report


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------


def render_report_text(report: BenchReport) -> str:
    lines = []
    lines.append(f"questions: {len(report.outcomes)}")
    lines.append(f"Hit@1:     {report.hit_at_1:.3f}")
    lines.append(f"Rlx-Hit@1: {report.rlx_hit_at_1:.3f}")
    latency = report.latency_stats()
    lines.append(
        f"latency:   mean {latency['mean_s'] * 1000:.1f} ms, "
        f"median {latency['median_s'] * 1000:.1f} ms"
    )
    lines.append("")
    lines.append(f"{'complexity':<14}{'questions':>10}{'Hit@1':>10}{'Rlx':>8}")
    for tag, row in sorted(report.per_tag().items()):
        lines.append(
            f"{tag:<14}{row['questions']:>10}{row['hit_at_1']:>10.3f}{row['rlx_hit_at_1']:>8.3f}"
        )
    lines.append("")
    lines.append(f"{'operator':<12}{'calls':>8}{'mean':>14}{'median':>14}")
    for operator, row in report.operator_stats().items():
        lines.append(
            f"{operator:<12}{row['calls']:>8}{row['mean_s']:>13.6f}s{row['median_s']:>13.6f}s"
        )
    return "\n".join(lines)


def write_report(report: BenchReport, out_dir: str | Path) -> dict:
    """Write report.json, per-question CSV, summary text and figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    payload = {
        "questions": len(report.outcomes),
        "hit_at_1": report.hit_at_1,
        "rlx_hit_at_1": report.rlx_hit_at_1,
        "latency": report.latency_stats(),
        "per_tag": report.per_tag(),
        "operator_runtimes": report.operator_stats(),
    }
    (out / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    with (out / "questions.csv").open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "persona",
                "question",
                "gold",
                "predicted",
                "hit",
                "rlx_hit",
                "tags",
                "structured_only",
                "elapsed_s",
                "error",
            ]
        )
        for o in report.outcomes:
            writer.writerow(
                [
                    o.persona_id,
                    o.question,
                    value_to_text(o.gold) if o.gold is not None else "",
                    value_to_text(o.predicted) if o.predicted is not None else "",
                    o.strict,
                    o.relaxed,
                    " ".join(sorted(o.tags)),
                    int(o.structured_only),
                    f"{o.elapsed_s:.6f}",
                    o.error or "",
                ]
            )

    (out / "summary.txt").write_text(render_report_text(report) + "\n", encoding="utf-8")
    figures = render_figures(report, out / "figures")
    return {"out_dir": str(out), "figures": [str(f) for f in figures]}


def render_figures(report: BenchReport, fig_dir: str | Path) -> list:
    """Render per-tag accuracy and per-operator runtime charts to PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    per_tag = report.per_tag()
    if per_tag:
        tags = sorted(per_tag)
        strict = [per_tag[t]["hit_at_1"] for t in tags]
        relaxed = [per_tag[t]["rlx_hit_at_1"] for t in tags]
        positions = range(len(tags))
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.bar([p - 0.2 for p in positions], strict, width=0.4, label="Hit@1")
        ax.bar([p + 0.2 for p in positions], relaxed, width=0.4, label="Rlx-Hit@1")
        ax.set_xticks(list(positions))
        ax.set_xticklabels(tags, rotation=30, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("accuracy")
        ax.set_title("Accuracy by complexity type")
        ax.legend()
        fig.tight_layout()
        path = fig_dir / "hit_by_tag.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    stats = report.operator_stats()
    if stats:
        operators = list(stats)
        means = [stats[op]["mean_s"] for op in operators]
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.barh(operators, means)
        ax.set_xlabel("mean runtime (s)")
        ax.set_xscale("log")
        ax.set_title("Average operator run-times")
        fig.tight_layout()
        path = fig_dir / "operator_runtimes.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    return written
