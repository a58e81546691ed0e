"""Dataset directory layout: write and load generated benchmarks.

Per persona: the questionnaire dump, observable events as an event-lines
file, the canonical store dump, the question file (one instance per line with
gold and tags), retrieval probes, and the notable-user-info file. The
probability config and the persona/template split assignment sit at the root.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Optional

from ..events import EventStore, load_store
from ..values import Value, value_to_text
from .events_gen import GenerationConfig, generate_canonical_events
from .personas import Persona, generate_persona
from .questions import TEMPLATE_NAMES, QuestionInstance, instantiate_questions, retrieval_probes
from .verbalize import build_observable_store


def _gold_to_json(value: Value) -> dict:
    if isinstance(value, bool):
        return {"type": "int", "value": int(value)}
    if isinstance(value, int):
        return {"type": "int", "value": value}
    if isinstance(value, float):
        return {"type": "float", "value": value}
    if isinstance(value, str):
        return {"type": "str", "value": value}
    if isinstance(value, datetime):
        return {"type": "datetime", "value": value.isoformat()}
    if isinstance(value, date):
        return {"type": "date", "value": value.isoformat()}
    if isinstance(value, time):
        return {"type": "time", "value": value.isoformat()}
    if isinstance(value, timedelta):
        return {"type": "duration", "value": int(value.total_seconds())}
    if isinstance(value, list):
        return {"type": "list", "value": [value_to_text(v) for v in value]}
    raise TypeError(f"cannot serialize gold value {value!r}")


def _gold_from_json(payload: dict) -> Value:
    kind, raw = payload["type"], payload["value"]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "str":
        return raw
    if kind == "date":
        return date.fromisoformat(raw)
    if kind == "time":
        return time.fromisoformat(raw)
    if kind == "datetime":
        return datetime.fromisoformat(raw)
    if kind == "duration":
        return timedelta(seconds=raw)
    if kind == "list":
        return list(raw)
    raise ValueError(f"unknown gold type {kind!r}")


def _event_lines(store: EventStore) -> str:
    from ..events import _attrs_to_json  # canonical JSON value forms

    lines = []
    for event in store:
        record = {
            "id": event.id,
            "source": event.source.value,
            "start": event.span.start.isoformat(),
            "end": event.span.end.isoformat(),
        }
        record.update(
            {k: v for k, v in _attrs_to_json(event.attrs).items() if k != "source"}
        )
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n"


def _user_info(persona: Persona) -> str:
    lines = [f"friend: {name}" for name in persona.friends]
    lines.append(f"mother: {persona.mother}")
    lines.append(f"father: {persona.father}")
    for kid in persona.kids:
        lines.append(f"kid: {kid.name}")
    return "\n".join(lines) + "\n"


def _persona_json(persona: Persona) -> str:
    def encode(value):
        if isinstance(value, (date, datetime)):
            return value.isoformat()
        if isinstance(value, list):
            return [encode(v) for v in value]
        if hasattr(value, "__dataclass_fields__"):
            return {k: encode(v) for k, v in asdict(value).items()}
        return value

    return json.dumps(
        {k: encode(v) for k, v in persona.field_values().items()},
        indent=2,
        sort_keys=True,
        default=str,
    )


def make_splits(persona_ids: list, template_names: tuple = TEMPLATE_NAMES) -> dict:
    """Disjoint persona and template assignment for train/dev/test."""
    n = len(persona_ids)
    n_test = max(1, n // 4) if n > 1 else 0
    n_dev = max(1, n // 4) if n > 2 else 0
    test_p = persona_ids[:n_test]
    dev_p = persona_ids[n_test : n_test + n_dev]
    train_p = persona_ids[n_test + n_dev :]
    t = len(template_names)
    t_test = max(1, t // 4)
    t_dev = max(1, t // 4)
    test_t = list(template_names[:t_test])
    dev_t = list(template_names[t_test : t_test + t_dev])
    train_t = list(template_names[t_test + t_dev :])
    return {
        "train": {"personas": train_p, "templates": train_t},
        "dev": {"personas": dev_p, "templates": dev_t},
        "test": {"personas": test_p, "templates": test_t},
    }


def write_dataset(
    out_dir: str | Path,
    personas: int = 2,
    seed: int = 1,
    start: date = date(2021, 1, 1),
    end: date = date(2023, 1, 1),
    clock: Optional[datetime] = None,
    config: Optional[GenerationConfig] = None,
) -> dict:
    """Generate and write a full dataset; returns summary counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = config or GenerationConfig()
    clock = clock or datetime.combine(end, time(0, 0))
    (out / "generation_config.json").write_text(config.to_json() + "\n", encoding="utf-8")

    persona_ids = []
    totals = {"personas": 0, "events": 0, "questions": 0, "probes": 0}
    for index in range(personas):
        persona_seed = seed + index
        persona_id = f"persona_{persona_seed:03d}"
        persona_ids.append(persona_id)
        persona = generate_persona(persona_seed)
        canonicals = generate_canonical_events(persona, start, end, config, seed=persona_seed)
        store, linkage = build_observable_store(canonicals, seed=persona_seed, config=config)
        instances = instantiate_questions(
            persona, canonicals, linkage, clock=clock, persona_id=persona_id
        )
        probes = retrieval_probes(persona, canonicals, linkage)

        pdir = out / persona_id
        pdir.mkdir(exist_ok=True)
        (pdir / "persona.json").write_text(_persona_json(persona) + "\n", encoding="utf-8")
        (pdir / "observable.events.jsonl").write_text(_event_lines(store), encoding="utf-8")
        from ..events import dump_store
        from .verbalize import build_canonical_store

        (pdir / "canonical.dump.jsonl").write_text(
            dump_store(build_canonical_store(canonicals)), encoding="utf-8"
        )
        (pdir / "user_info.txt").write_text(_user_info(persona), encoding="utf-8")
        with (pdir / "questions.jsonl").open("w", encoding="utf-8") as handle:
            for q in instances:
                handle.write(
                    json.dumps(
                        {
                            "question": q.question,
                            "persona_id": q.persona_id,
                            "template": q.template,
                            "tags": sorted(q.tags),
                            "structured_only": q.structured_only,
                            "gold": _gold_to_json(q.gold),
                            "script": q.script,
                            "retrieve_gold": {
                                query: list(ids) for query, ids in q.retrieve_gold.items()
                            },
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                    + "\n"
                )
        with (pdir / "probes.jsonl").open("w", encoding="utf-8") as handle:
            for query, gold_ids in probes:
                handle.write(
                    json.dumps({"query": query, "gold": list(gold_ids)}, ensure_ascii=False)
                    + "\n"
                )
        totals["personas"] += 1
        totals["events"] += len(store)
        totals["questions"] += len(instances)
        totals["probes"] += len(probes)

    (out / "splits.json").write_text(
        json.dumps(make_splits(persona_ids), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return totals


class PersonaDataset:
    def __init__(self, persona_id: str, directory: Path):
        self.persona_id = persona_id
        self.directory = directory
        self._store: Optional[EventStore] = None

    @property
    def store(self) -> EventStore:
        if self._store is None:
            from ..ingest import StoreBuilder

            builder = StoreBuilder()
            builder.ingest(self.directory / "observable.events.jsonl", "event-lines")
            self._store = builder.finalize()
        return self._store

    @property
    def canonical_store(self) -> EventStore:
        return load_store((self.directory / "canonical.dump.jsonl").read_text(encoding="utf-8"))

    @property
    def user_info(self) -> str:
        return (self.directory / "user_info.txt").read_text(encoding="utf-8")

    def questions(self) -> list:
        out = []
        for line in (self.directory / "questions.jsonl").read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            payload = json.loads(line)
            out.append(
                QuestionInstance(
                    question=payload["question"],
                    script=payload["script"],
                    retrieve_gold={
                        query: tuple(ids) for query, ids in payload["retrieve_gold"].items()
                    },
                    gold=_gold_from_json(payload["gold"]),
                    tags=frozenset(payload["tags"]),
                    structured_only=payload["structured_only"],
                    template=payload["template"],
                    persona_id=payload["persona_id"],
                )
            )
        return out

    def probes(self) -> list:
        out = []
        path = self.directory / "probes.jsonl"
        if not path.exists():
            return out
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip():
                payload = json.loads(line)
                out.append((payload["query"], tuple(payload["gold"])))
        return out


def load_dataset(directory: str | Path) -> list:
    """All persona sub-datasets in a generated dataset directory."""
    root = Path(directory)
    out = []
    for pdir in sorted(root.iterdir()):
        if pdir.is_dir() and (pdir / "questions.jsonl").exists():
            out.append(PersonaDataset(pdir.name, pdir))
    return out
