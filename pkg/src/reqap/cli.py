"""Command-line surface: ingest, generate, exec, ask, bench and a REPL.

Configuration comes from flags, optionally overridden by a JSON config file
given via --config or the REQAP_CONFIG environment variable (file values win
over flags). Answers print deterministically: the resolved plan, the answer
value, and the provenance event ids; per-node timings go to stderr only when
--trace is set so stdout stays byte-stable across runs.
"""

from __future__ import annotations

import json
import os
import sys
from datetime import date, datetime, time
from pathlib import Path

import click

from .bench import BenchReport, render_report_text, run_benchmark, write_report
from .decompose import (
    DecomposerMissError,
    DepthExceededError,
    GeneratorClient,
    ScriptedDecomposer,
    UnparseablePlanError,
    resolve,
)
from .engine import (
    ExecContext,
    ExecError,
    ExtractionBundle,
    RetrievalBundle,
    execute,
    make_context,
)
from .events import dump_store, load_store, verbalize_event
from .extraction import HttpValueGenerator, RuleBasedGenerator
from .ingest import FORMATS, StoreBuilder, UnknownFormatError, UnreadableFileError
from .plan.parser import PlanSyntaxError, parse_plan
from .plan.printer import render_plan
from .plan.validator import validate_plan
from .retrieval import (
    HttpClassifier,
    LexicalClassifiers,
    LexicalScorer,
    OracleClassifiers,
    RetrievalConfig,
)
from .runner import answer_of, bench_questions, build_runner
from .values import value_to_text

CONFIG_ENV = "REQAP_CONFIG"
CONFIG_KEYS = (
    "store",
    "decomposer",
    "classifier",
    "extractor",
    "clock",
    "seed",
    "score_threshold",
    "pattern_freq_threshold",
)


class CliConfig:
    """Merged command configuration; exactly one mode per pluggable component."""

    def __init__(self, **values):
        self.store = values.get("store")
        self.decomposer = values.get("decomposer")
        self.classifier = values.get("classifier") or "lexical"
        self.extractor = values.get("extractor") or "rules"
        self.clock = values.get("clock")
        self.seed = values.get("seed", 0)
        self.score_threshold = values.get("score_threshold", 0.1)
        self.pattern_freq_threshold = values.get("pattern_freq_threshold", 0.05)

    def retrieval_config(self) -> RetrievalConfig:
        return RetrievalConfig(
            score_threshold=self.score_threshold,
            pattern_freq_threshold=self.pattern_freq_threshold,
        )

    def clock_value(self) -> datetime:
        if not self.clock:
            return datetime(2025, 1, 1)
        try:
            return datetime.fromisoformat(self.clock)
        except ValueError:
            try:
                return datetime.combine(date.fromisoformat(self.clock), time.min)
            except ValueError:
                raise click.UsageError(f"invalid --clock value: {self.clock!r}")

    def load_store(self):
        if not self.store:
            raise click.UsageError("a --store is required for this command")
        path = Path(self.store)
        if not path.is_file():
            raise click.UsageError(f"store file not found: {path}")
        return load_store(path.read_text(encoding="utf-8"))

    def build_decomposer(self):
        if not self.decomposer:
            raise click.UsageError(
                "a --decomposer (scripted:PATH or external:URL) is required"
            )
        mode, _, arg = self.decomposer.partition(":")
        if mode == "scripted" and arg:
            return ScriptedDecomposer.from_file(arg)
        if mode == "external" and arg:
            return GeneratorClient(arg)
        raise click.UsageError(f"invalid --decomposer value: {self.decomposer!r}")

    def build_classifiers(self):
        mode, _, arg = self.classifier.partition(":")
        if mode == "lexical":
            lexical = LexicalClassifiers()
            return lexical, lexical
        if mode == "oracle" and arg:
            path = Path(arg)
            if not path.is_file():
                raise click.UsageError(f"oracle label file not found: {path}")
            gold = json.loads(path.read_text(encoding="utf-8"))
            oracle = OracleClassifiers(gold)
            return oracle, oracle
        if mode == "external" and arg:
            external = HttpClassifier(arg)
            return external, external
        raise click.UsageError(f"invalid --classifier value: {self.classifier!r}")

    def build_generator(self):
        mode, _, arg = self.extractor.partition(":")
        if mode == "rules":
            return RuleBasedGenerator()
        if mode == "external" and arg:
            return HttpValueGenerator(arg)
        raise click.UsageError(f"invalid --extractor value: {self.extractor!r}")

    def context(self, store, user_info: str = "") -> ExecContext:
        pattern_classifier, event_classifier = self.build_classifiers()
        return make_context(
            store,
            clock=self.clock_value(),
            retrieval=RetrievalBundle(
                cfg=self.retrieval_config(),
                scorer=LexicalScorer(store),
                pattern_classifier=pattern_classifier,
                event_classifier=event_classifier,
            ),
            extraction=ExtractionBundle(
                generator=self.build_generator(), user_info=user_info
            ),
        )


def _merge_config(flags: dict) -> CliConfig:
    """Flags first; a config file (--config or REQAP_CONFIG) overrides them."""
    values = {k: v for k, v in flags.items() if v is not None}
    config_path = flags.get("config") or os.environ.get(CONFIG_ENV)
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise click.UsageError(f"config file not found: {path}")
        try:
            overrides = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise click.UsageError(f"config file is not valid JSON: {exc}")
        for key, value in overrides.items():
            if key not in CONFIG_KEYS:
                raise click.UsageError(f"unknown config key {key!r}")
            values[key] = value
    return CliConfig(**values)


def _global_options(fn):
    options = [
        click.option("--store", help="canonical store dump to query"),
        click.option("--decomposer", help="scripted:PATH or external:URL"),
        click.option("--classifier", help="lexical, oracle:PATH or external:URL"),
        click.option("--extractor", help="rules or external:URL"),
        click.option("--clock", help="fixed 'today' (ISO date or datetime)"),
        click.option("--seed", type=int, default=None, help="seed for any randomness"),
        click.option("--config", help="JSON config file (overrides flags)"),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Operator-tree question answering over personal event data."""


def _print_answer(plan, result, store, trace=None, show_trace=False) -> None:
    click.echo(f"plan: {render_plan(plan)}")
    click.echo(f"answer: {value_to_text(answer_of(result))}")
    ids = sorted(result.provenance)
    click.echo(f"provenance: {' '.join(ids) if ids else '(none)'}")
    for event_id in ids:
        event = store.get(event_id)
        if event is not None:
            click.echo(f"  {event_id}: {verbalize_event(event)[:120]}")
    if show_trace and trace is not None:
        for record in trace.records:
            click.echo(
                f"trace {record.node_id} {record.operator} in={record.input_sizes} "
                f"out={record.output_size} {record.elapsed_s * 1000:.2f}ms",
                err=True,
            )


def _fail_execution(error: Exception) -> None:
    click.echo(f"error: {error}", err=True)
    sys.exit(1)


@main.command("ingest")
@click.argument("paths", nargs=-1, required=True, type=click.Path(exists=True))
@click.option(
    "--format",
    "formats",
    multiple=True,
    required=True,
    type=click.Choice(FORMATS),
    help="format per input file (repeat, or give once for all)",
)
@click.option("--out", required=True, type=click.Path(), help="store dump to write")
def cmd_ingest(paths, formats, out) -> None:
    """Parse export files into a canonical store dump."""
    if len(formats) not in (1, len(paths)):
        raise click.UsageError("give one --format for all files or one per file")
    if len(formats) == 1:
        formats = formats * len(paths)
    builder = StoreBuilder()
    added = skipped = 0
    try:
        for path, fmt in zip(paths, formats):
            report = builder.ingest(path, fmt)
            added += report.added
            skipped += report.skipped
        store = builder.finalize()
    except (UnknownFormatError, UnreadableFileError) as exc:
        raise click.UsageError(str(exc))
    except Exception as exc:  # noqa: BLE001
        _fail_execution(exc)
    Path(out).write_text(dump_store(store), encoding="utf-8")
    click.echo(f"ingested {added} events ({skipped} skipped) -> {out}")


@main.command("generate")
@click.option("--out", required=True, type=click.Path(), help="dataset directory")
@click.option("--personas", default=2, show_default=True)
@click.option("--seed", default=1, show_default=True)
@click.option("--start", default="2021-01-01", show_default=True)
@click.option("--end", default="2023-01-01", show_default=True)
@click.option("--music-rate", type=float, default=3.0, show_default=True)
def cmd_generate(out, personas, seed, start, end, music_rate) -> None:
    """Generate a synthetic persona dataset with gold answers."""
    from .persona.dataset import write_dataset
    from .persona.events_gen import GenerationConfig

    try:
        start_date = date.fromisoformat(start)
        end_date = date.fromisoformat(end)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    totals = write_dataset(
        Path(out),
        personas=personas,
        seed=seed,
        start=start_date,
        end=end_date,
        config=GenerationConfig(music_per_day=music_rate),
    )
    click.echo(
        "generated {personas} personas, {events} observable events, "
        "{questions} questions, {probes} probes -> {out}".format(out=out, **totals)
    )


@main.command("exec")
@click.argument("plan_file", type=click.Path(exists=True))
@_global_options
@click.option("--trace", is_flag=True, help="print per-node timings to stderr")
def cmd_exec(plan_file, trace, **flags) -> None:
    """Execute a plan file against the store and print the traced answer."""
    cfg = _merge_config(flags)
    store = cfg.load_store()
    text = Path(plan_file).read_text(encoding="utf-8")
    try:
        plan = parse_plan(text)
    except PlanSyntaxError as exc:
        _fail_execution(exc)
    diagnostics = validate_plan(plan)
    errors = [d for d in diagnostics if d.level == "ERROR"]
    if errors:
        for diagnostic in errors:
            click.echo(str(diagnostic), err=True)
        sys.exit(1)
    ctx = cfg.context(store)
    try:
        result = execute(plan, ctx)
    except ExecError as exc:
        _fail_execution(exc)
    _print_answer(plan, result, store, ctx.trace, trace)


def _ask_once(question: str, cfg: CliConfig, store, decomposer, show_trace: bool) -> None:
    try:
        plan = resolve(question, decomposer)
    except (DecomposerMissError, UnparseablePlanError, DepthExceededError) as exc:
        _fail_execution(exc)
    ctx = cfg.context(store)
    try:
        result = execute(plan, ctx)
    except ExecError as exc:
        _fail_execution(exc)
    _print_answer(plan, result, store, ctx.trace, show_trace)


@main.command("ask")
@click.argument("question")
@_global_options
@click.option("--trace", is_flag=True, help="print per-node timings to stderr")
def cmd_ask(question, trace, **flags) -> None:
    """Decompose a question, execute the plan, and print the traced answer."""
    cfg = _merge_config(flags)
    store = cfg.load_store()
    decomposer = cfg.build_decomposer()
    _ask_once(question, cfg, store, decomposer, trace)


@main.command("bench")
@click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", required=True, type=click.Path(), help="report directory")
@click.option(
    "--classifier",
    default="oracle",
    show_default=True,
    type=click.Choice(["oracle", "lexical"]),
    help="retrieval classifiers for the run",
)
@click.option(
    "--clock",
    required=True,
    help="fixed 'today' for temporal questions (mandatory: runs must be reproducible)",
)
def cmd_bench(dataset_dir, out, classifier, clock) -> None:
    """Run a generated dataset through the engine and write the report."""
    from .persona.dataset import load_dataset

    personas = load_dataset(dataset_dir)
    if not personas:
        raise click.UsageError(f"no persona datasets under {dataset_dir}")
    try:
        clock_dt = datetime.fromisoformat(clock)
    except ValueError:
        clock_dt = datetime.combine(date.fromisoformat(clock), time.min)
    merged = BenchReport()
    for persona_dataset in personas:
        questions = bench_questions(persona_dataset.questions())
        runner = build_runner(
            persona_dataset.store,
            clock=clock_dt,
            classifier_mode=classifier,
            user_info=persona_dataset.user_info,
        )
        report = run_benchmark(questions, runner)
        merged.outcomes.extend(report.outcomes)
        for operator, timings in report.operator_timings.items():
            merged.operator_timings.setdefault(operator, []).extend(timings)
    artifacts = write_report(merged, out)
    click.echo(render_report_text(merged))
    click.echo(f"report written to {artifacts['out_dir']}")


@main.command("repl")
@_global_options
def cmd_repl(**flags) -> None:
    """Interactive loop: one question per line, answer with provenance."""
    cfg = _merge_config(flags)
    store = cfg.load_store()
    decomposer = cfg.build_decomposer()
    click.echo("type a question (blank line or 'exit' to quit)")
    while True:
        try:
            line = input("? ").strip()
        except EOFError:
            break
        if not line or line.lower() in ("exit", "quit"):
            break
        try:
            plan = resolve(line, decomposer)
            ctx = cfg.context(store)
            result = execute(plan, ctx)
        except (
            DecomposerMissError,
            UnparseablePlanError,
            DepthExceededError,
            ExecError,
        ) as exc:
            click.echo(f"error: {exc}", err=True)
            continue
        _print_answer(plan, result, store)


if __name__ == "__main__":
    main()
