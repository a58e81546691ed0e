import json
from datetime import date, datetime
from pathlib import Path

from click.testing import CliRunner

from reqap.cli import main
from reqap.events import EventStore, dump_store

from conftest import Q3, Q3_EXPECTED_COUNT, Q3_SCRIPT, ev


def _store_file(tmp_path, store):
    path = tmp_path / "store.jsonl"
    path.write_text(dump_store(store), encoding="utf-8")
    return path


def _script_file(tmp_path, script):
    path = tmp_path / "script.tsv"
    lines = [f"{question}\t{plan}" for question, plan in script.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def test_ingest_then_exec_earliest_appointment(tmp_path):
    events_file = tmp_path / "events.jsonl"
    records = [
        {"source": "calendar", "start": "2023-03-01T09:00:00", "end": "2023-03-01T09:30:00",
         "summary": "Dentist appointment"},
        {"source": "calendar", "start": "2023-03-02T14:00:00", "end": "2023-03-02T14:30:00",
         "summary": "Gp appointment"},
        {"source": "calendar", "start": "2023-03-03T08:15:00", "end": "2023-03-03T08:45:00",
         "summary": "Dermatologist appointment"},
    ]
    events_file.write_text("\n".join(json.dumps(r) for r in records), encoding="utf-8")
    store_file = tmp_path / "store.jsonl"
    runner = CliRunner()
    result = runner.invoke(main, [
        "ingest", str(events_file), "--format", "event-lines", "--out", str(store_file),
    ])
    assert result.exit_code == 0, result.output
    assert "ingested 3 events (0 skipped)" in result.output

    plan_file = tmp_path / "plan.txt"
    plan_file.write_text(
        'ARGMIN(l=EXTRACT(l=RETRIEVE(query="appointment"), '
        'attr_names=["start_time", "appointment_details"], '
        "attr_types=[time.fromisoformat, str]), "
        'arg_attr_name="start_time", val_attr_name="appointment_details")',
        encoding="utf-8",
    )
    result = runner.invoke(main, ["exec", str(plan_file), "--store", str(store_file)])
    assert result.exit_code == 0, result.output
    assert "answer: Dermatologist appointment" in result.output
    assert "provenance:" in result.output
    # exactly one supporting event, resolvable in the store
    provenance_line = [l for l in result.output.splitlines() if l.startswith("provenance:")][0]
    ids = provenance_line.split(":", 1)[1].split()
    assert len(ids) == 1


def test_ask_q3_walkthrough(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    script_file = _script_file(tmp_path, Q3_SCRIPT)
    runner = CliRunner()
    result = runner.invoke(main, [
        "ask", Q3, "--store", str(store_file),
        "--decomposer", f"scripted:{script_file}",
        "--clock", "2020-01-01",
    ])
    assert result.exit_code == 0, result.output
    assert f"answer: {Q3_EXPECTED_COUNT}" in result.output


def test_ask_decomposer_miss_exits_one(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    script_file = _script_file(tmp_path, {"other": 'RETRIEVE(query="x")'})
    runner = CliRunner()
    result = runner.invoke(main, [
        "ask", "unknown question", "--store", str(store_file),
        "--decomposer", f"scripted:{script_file}",
    ])
    assert result.exit_code == 1
    assert "no scripted plan" in result.output


def test_missing_store_is_config_error(tmp_path):
    runner = CliRunner()
    plan_file = tmp_path / "p.txt"
    plan_file.write_text('RETRIEVE(query="x")', encoding="utf-8")
    result = runner.invoke(main, ["exec", str(plan_file)])
    assert result.exit_code == 2


def test_stdout_byte_identical_across_runs(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    script_file = _script_file(tmp_path, Q3_SCRIPT)
    runner = CliRunner()
    args = [
        "ask", Q3, "--store", str(store_file),
        "--decomposer", f"scripted:{script_file}", "--clock", "2020-01-01",
    ]
    first = runner.invoke(main, args)
    second = runner.invoke(main, args)
    assert first.output == second.output


def test_config_file_overrides_flags(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    other_store = tmp_path / "other.jsonl"
    other_store.write_text(
        dump_store(EventStore([
            ev("solo", "note", "2020-01-01T10:00:00", "2020-01-01T10:00:00", text="football"),
        ])),
        encoding="utf-8",
    )
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"store": str(store_file)}), encoding="utf-8")
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text('RETRIEVE(query="football")', encoding="utf-8")

    runner = CliRunner()
    # the config file's store wins over the flag store
    result = runner.invoke(main, [
        "exec", str(plan_file), "--store", str(other_store), "--config", str(config_file),
    ])
    assert result.exit_code == 0, result.output
    assert "w1" in result.output  # counting store event, not "solo"


def test_config_env_var_fallback(tmp_path, counting_store, monkeypatch):
    store_file = _store_file(tmp_path, counting_store)
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"store": str(store_file)}), encoding="utf-8")
    monkeypatch.setenv("REQAP_CONFIG", str(config_file))
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text('RETRIEVE(query="football")', encoding="utf-8")
    runner = CliRunner()
    result = runner.invoke(main, ["exec", str(plan_file)])
    assert result.exit_code == 0, result.output


def test_exec_invalid_plan_reports_diagnostics(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    plan_file = tmp_path / "plan.txt"
    plan_file.write_text('SUM(l=RETRIEVE(query="x"), attr_name="nope")', encoding="utf-8")
    runner = CliRunner()
    result = runner.invoke(main, ["exec", str(plan_file), "--store", str(store_file)])
    assert result.exit_code == 1
    assert "unproduced-key" in result.output


def test_generate_and_bench_smoke(tmp_path):
    runner = CliRunner()
    dataset_dir = tmp_path / "dataset"
    result = runner.invoke(main, [
        "generate", "--out", str(dataset_dir), "--personas", "1", "--seed", "5",
        "--start", "2022-01-01", "--end", "2022-07-01", "--music-rate", "1.5",
    ])
    assert result.exit_code == 0, result.output
    assert "generated 1 personas" in result.output

    report_dir = tmp_path / "report"
    result = runner.invoke(main, [
        "bench", str(dataset_dir), "--out", str(report_dir),
        "--classifier", "oracle", "--clock", "2022-07-01T00:00:00",
    ])
    assert result.exit_code == 0, result.output
    assert "Hit@1" in result.output
    payload = json.loads((report_dir / "report.json").read_text(encoding="utf-8"))
    assert 0.0 <= payload["hit_at_1"] <= 1.0
    assert payload["per_tag"]
    assert (report_dir / "figures" / "hit_by_tag.png").exists()


def test_repl_loop(tmp_path, counting_store):
    store_file = _store_file(tmp_path, counting_store)
    script_file = _script_file(tmp_path, Q3_SCRIPT)
    runner = CliRunner()
    result = runner.invoke(
        main,
        ["repl", "--store", str(store_file), "--decomposer", f"scripted:{script_file}",
         "--clock", "2020-01-01"],
        input=f"{Q3}\nnot in script\nexit\n",
    )
    assert result.exit_code == 0
    assert f"answer: {Q3_EXPECTED_COUNT}" in result.output
