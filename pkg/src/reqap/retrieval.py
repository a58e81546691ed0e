"""The RETRIEVE operator: a five-step high-recall pipeline.

1. Sparse lexical scoring of verbalized events; candidates keep a
   max-normalized score above the threshold.
2. Pattern mining over the candidate pool: frequent key-value pairs plus one
   whole-source pattern per represented source.
3. Three-way pattern classification (relevant / irrelevant / partial);
   relevant keeps and bypasses step 4, irrelevant-only coverage drops.
4. Per-event keep/drop classification of the partially-relevant pool.
5. De-duplication: transitive merge of overlapping same-happening captures
   from different sources.

Scorer and classifiers sit behind interfaces; the built-ins are a BM25-style
lexical scorer, lexical-overlap heuristic classifiers, and oracle classifiers
backed by gold relevance labels (test/benchmark use).
"""

from __future__ import annotations

import json
import math
import re
import urllib.request
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from .events import Event, EventStore, verbalize_event
from .values import value_to_text

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"
PARTIAL = "partial"

_TOKEN_RE = re.compile(r"[a-z0-9]+")

STOPWORDS = frozenset(
    """a an and are as at be but by did do for from had has have how i in is it me my
    of on or she so that the their them they this to was we were what when where which
    who with you your instances""".split()
)


def tokenize(text: str) -> list:
    return _TOKEN_RE.findall(text.lower())


def content_tokens(text: str) -> set:
    return {tok for tok in tokenize(text) if tok not in STOPWORDS}


class EmptyQueryError(Exception):
    pass


class UnlabeledPatternError(Exception):
    pass


# ---------------------------------------------------------------------------
# Step 1: sparse scoring
# ---------------------------------------------------------------------------


class Scorer(Protocol):
    def score(self, query: str, doc: str) -> float: ...


class LexicalScorer:
    """BM25 scoring over verbalized events; zero when no tokens are shared."""

    def __init__(self, store: Optional[EventStore] = None, k1: float = 1.5, b: float = 0.75):
        self.k1 = k1
        self.b = b
        self._df: dict[str, int] = {}
        self._postings: dict[str, set] = {}
        self._doc_tokens: dict[str, dict] = {}
        self._doc_len: dict[str, int] = {}
        self._n_docs = 0
        self._avgdl = 1.0
        if store is not None:
            self._index(store)

    def _index(self, store: EventStore) -> None:
        total_len = 0
        for event in store:
            tokens = tokenize(verbalize_event(event))
            counts: dict[str, int] = {}
            for token in tokens:
                counts[token] = counts.get(token, 0) + 1
            self._doc_tokens[event.id] = counts
            self._doc_len[event.id] = len(tokens)
            total_len += len(tokens)
            for token in counts:
                self._df[token] = self._df.get(token, 0) + 1
                self._postings.setdefault(token, set()).add(event.id)
        self._n_docs = len(store)
        self._avgdl = (total_len / self._n_docs) if self._n_docs else 1.0

    @property
    def indexed(self) -> bool:
        return self._n_docs > 0

    def _idf(self, token: str) -> float:
        if not self._n_docs:
            return 1.0
        df = self._df.get(token, 0)
        return math.log(1.0 + (self._n_docs - df + 0.5) / (df + 0.5))

    def _bm25(self, query_tokens: Sequence[str], counts: Mapping[str, int], dl: int) -> float:
        score = 0.0
        seen = set()
        for token in query_tokens:
            if token in seen:
                continue
            seen.add(token)
            tf = counts.get(token, 0)
            if tf == 0:
                continue
            norm = tf + self.k1 * (1.0 - self.b + self.b * dl / self._avgdl)
            score += self._idf(token) * tf * (self.k1 + 1.0) / norm
        return score

    def score(self, query: str, doc: str) -> float:
        tokens = tokenize(doc)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        return self._bm25(tokenize(query), counts, len(tokens))

    def score_event(self, query_tokens: Sequence[str], event: Event) -> float:
        counts = self._doc_tokens.get(event.id)
        if counts is None:
            doc_tokens = tokenize(verbalize_event(event))
            counts = {}
            for token in doc_tokens:
                counts[token] = counts.get(token, 0) + 1
            return self._bm25(query_tokens, counts, len(doc_tokens))
        return self._bm25(query_tokens, counts, self._doc_len[event.id])

    def candidate_ids(self, query_tokens: Sequence[str]) -> set:
        ids: set[str] = set()
        for token in query_tokens:
            ids |= self._postings.get(token, set())
        return ids


@dataclass
class RetrievalConfig:
    score_threshold: float = 0.1  # on max-normalized scores
    pattern_freq_threshold: float = 0.05
    merge_across_sources_only: bool = True

    def __post_init__(self) -> None:
        if not 0 < self.score_threshold <= 1:
            raise ValueError("score_threshold must be in (0, 1]")
        if not 0 < self.pattern_freq_threshold <= 1:
            raise ValueError("pattern_freq_threshold must be in (0, 1]")


@dataclass(frozen=True)
class ScoredEvent:
    event: Event
    score: float


def sparse_retrieve(
    query: str,
    store: EventStore,
    cfg: Optional[RetrievalConfig] = None,
    scorer: Optional[LexicalScorer] = None,
    pool: Optional[Sequence[Event]] = None,
) -> list:
    """Score the pool and keep events above the normalized threshold.

    Scores are divided by the pool maximum so the threshold is
    corpus-independent; ordering is score-descending with id tiebreak.
    """
    cfg = cfg or RetrievalConfig()
    query_tokens = tokenize(query)
    if not query_tokens:
        raise EmptyQueryError("query has no tokens")
    scorer = scorer or LexicalScorer(store)

    if pool is None and isinstance(scorer, LexicalScorer) and scorer.indexed:
        candidates = [store.get(i) for i in scorer.candidate_ids(query_tokens)]
        candidates = [e for e in candidates if e is not None]
    else:
        candidates = list(pool) if pool is not None else list(store)

    scored = []
    for event in candidates:
        if isinstance(scorer, LexicalScorer):
            raw = scorer.score_event(query_tokens, event)
        else:
            raw = scorer.score(query, verbalize_event(event))
        if raw > 0:
            scored.append((event, raw))
    if not scored:
        return []
    max_score = max(raw for _, raw in scored)
    out = [
        ScoredEvent(event, raw / max_score)
        for event, raw in scored
        if raw / max_score > cfg.score_threshold
    ]
    out.sort(key=lambda se: (-se.score, se.event.id))
    return out


# ---------------------------------------------------------------------------
# Step 2: pattern mining
# ---------------------------------------------------------------------------


@dataclass
class Pattern:
    kind: str  # "key_value" | "whole_source"
    key: str
    value: object
    support: int
    label: Optional[str] = None

    def matches(self, event: Event) -> bool:
        if self.kind == "whole_source":
            return event.source.value == self.value
        return event.attrs.get(self.key) == self.value

    def text(self) -> str:
        return f"{self.key}={value_to_text(self.value)}"


def mine_patterns(candidates: Sequence[Event], cfg: Optional[RetrievalConfig] = None) -> list:
    """Frequent key-value patterns plus one whole-source pattern per source."""
    cfg = cfg or RetrievalConfig()
    if not candidates:
        return []
    min_support = math.ceil(cfg.pattern_freq_threshold * len(candidates))
    counts: dict[tuple, int] = {}
    source_counts: dict[str, int] = {}
    for event in candidates:
        source_counts[event.source.value] = source_counts.get(event.source.value, 0) + 1
        for key, value in event.attrs.items():
            if key == "source" or isinstance(value, (list, bool)):
                continue
            counts[(key, value)] = counts.get((key, value), 0) + 1
    patterns = [
        Pattern("key_value", key, value, support)
        for (key, value), support in counts.items()
        if support >= min_support
    ]
    patterns.sort(key=lambda p: (-p.support, p.key, value_to_text(p.value)))
    source_patterns = [
        Pattern("whole_source", "source", source, support)
        for source, support in sorted(source_counts.items(), key=lambda kv: (-kv[1], kv[0]))
    ]
    return patterns + source_patterns


# ---------------------------------------------------------------------------
# Steps 3-4: classification
# ---------------------------------------------------------------------------


class PatternClassifier(Protocol):
    def classify_pattern(self, query: str, pattern: Pattern, samples: Sequence[Event]) -> str: ...


class EventClassifier(Protocol):
    def classify_event(self, query: str, event: Event) -> bool: ...


class LexicalClassifiers:
    """Overlap heuristics: recall-first, pruning only clearly unrelated events."""

    def classify_pattern(self, query: str, pattern: Pattern, samples: Sequence[Event]) -> str:
        query_content = content_tokens(query)
        if content_tokens(pattern.text()) & query_content:
            return RELEVANT
        if samples and not any(
            content_tokens(verbalize_event(e)) & query_content for e in samples
        ):
            return IRRELEVANT
        return PARTIAL

    def classify_event(self, query: str, event: Event) -> bool:
        return bool(content_tokens(verbalize_event(event)) & content_tokens(query))


class OracleClassifiers:
    """Gold-label classifiers (test/benchmark only): exact relevance per query."""

    def __init__(self, gold: Mapping[str, Iterable[str]]):
        self._gold = {query: frozenset(ids) for query, ids in gold.items()}

    def _relevant(self, query: str) -> frozenset:
        return self._gold.get(query, frozenset())

    def classify_pattern(self, query: str, pattern: Pattern, samples: Sequence[Event]) -> str:
        gold = self._relevant(query)
        matching = [e for e in samples if pattern.matches(e)]
        if not matching:
            return PARTIAL
        hits = sum(1 for e in matching if e.id in gold)
        if hits == len(matching):
            return RELEVANT
        if hits == 0:
            return IRRELEVANT
        return PARTIAL

    def classify_event(self, query: str, event: Event) -> bool:
        return event.id in self._relevant(query)


class HttpClassifier:
    """Plug-in boundary for learned classifiers over the HTTP wire contract.

    Request body: ``{"query": ..., "candidate": ...}``; response:
    ``{"label": ..., "score": ...}``. Pattern labels are relevant /
    irrelevant / partial; event labels are keep / drop.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, max_retries: int = 1):
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_retries = max_retries

    def _request(self, query: str, candidate: str) -> dict:
        body = json.dumps({"query": query, "candidate": candidate}).encode("utf-8")
        last_error: Optional[Exception] = None
        for _ in range(self.max_retries + 1):
            try:
                request = urllib.request.Request(
                    self.endpoint, data=body, headers={"Content-Type": "application/json"}
                )
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    return json.loads(response.read().decode("utf-8"))
            except Exception as exc:  # noqa: BLE001 - transport errors retried once
                last_error = exc
        raise RuntimeError(f"classifier endpoint failed: {last_error}")

    def classify_pattern(self, query: str, pattern: Pattern, samples: Sequence[Event]) -> str:
        label = self._request(query, pattern.text()).get("label", PARTIAL)
        return label if label in (RELEVANT, IRRELEVANT, PARTIAL) else PARTIAL

    def classify_event(self, query: str, event: Event) -> bool:
        return self._request(query, verbalize_event(event)).get("label") == "keep"


@dataclass
class PatternApplication:
    bypass: list = field(default_factory=list)  # kept via a relevant pattern (skip step 4)
    partial: list = field(default_factory=list)  # forwarded to step 4
    dropped: int = 0

    @property
    def kept(self) -> list:
        return self.bypass + self.partial


def apply_pattern_labels(candidates: Sequence[Event], patterns: Sequence[Pattern]) -> PatternApplication:
    """Partition candidates by their best covering label; keep wins over drop."""
    for pattern in patterns:
        if pattern.label not in (RELEVANT, IRRELEVANT, PARTIAL):
            raise UnlabeledPatternError(f"pattern {pattern.text()} has no valid label")
    result = PatternApplication()
    for event in candidates:
        labels = {p.label for p in patterns if p.matches(event)}
        if RELEVANT in labels:
            result.bypass.append(event)
        elif PARTIAL in labels or not labels:
            result.partial.append(event)
        else:
            result.dropped += 1
    return result


def classify_remaining(
    query: str, events: Sequence[Event], classifier: EventClassifier
) -> list:
    return [event for event in events if classifier.classify_event(query, event)]


# ---------------------------------------------------------------------------
# Step 5: de-duplication
# ---------------------------------------------------------------------------


def _merge_group(members: list) -> Event:
    ordered = sorted(
        members, key=lambda e: (-(e.span.end - e.span.start).total_seconds(), e.span.start, e.id)
    )
    winner = ordered[0]
    span = winner.span
    attrs: dict = {}
    provenance: frozenset = frozenset()
    for event in ordered:
        span = span.hull(event.span)
        provenance |= event.provenance
        for key, value in event.attrs.items():
            if key not in attrs:
                attrs[key] = value
            elif attrs[key] != value and key != "source":
                loser_key = f"{key}__{event.source.value}"
                attrs.setdefault(loser_key, value)
    attrs["source"] = winner.source.value
    return Event(
        id=winner.id, source=winner.source, span=span, attrs=attrs, provenance=provenance
    )


def _merge_pass(events: list, cross_source_only: bool) -> list:
    ordered = sorted(events, key=lambda e: (e.span.start, e.id))
    parent = list(range(len(ordered)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    active: list[int] = []
    for idx, event in enumerate(ordered):
        active = [a for a in active if ordered[a].span.end >= event.span.start]
        for a in active:
            if not cross_source_only or ordered[a].source != event.source:
                union(a, idx)
        active.append(idx)

    groups: dict[int, list] = {}
    for idx in range(len(ordered)):
        groups.setdefault(find(idx), []).append(ordered[idx])
    merged = [
        members[0] if len(members) == 1 else _merge_group(members)
        for members in groups.values()
    ]
    merged.sort(key=lambda e: (e.span.start, e.id))
    return merged


def deduplicate(events: Sequence[Event], cfg: Optional[RetrievalConfig] = None) -> list:
    """Transitively merge overlapping events from different sources.

    Merging runs to a fixed point: a merged event's widened span can newly
    overlap an event its members did not, so one union-find pass alone is not
    idempotent.
    """
    cfg = cfg or RetrievalConfig()
    current = list(events)
    while True:
        merged = _merge_pass(current, cfg.merge_across_sources_only)
        if len(merged) == len(current):
            return merged
        current = merged


# ---------------------------------------------------------------------------
# The full operator
# ---------------------------------------------------------------------------


def retrieve(
    query: str,
    store: EventStore,
    input: Optional[Sequence[Event]] = None,
    cfg: Optional[RetrievalConfig] = None,
    scorer: Optional[LexicalScorer] = None,
    pattern_classifier: Optional[PatternClassifier] = None,
    event_classifier: Optional[EventClassifier] = None,
) -> list:
    """Steps 1-5 in order; with ``input`` given the pipeline runs over it only."""
    cfg = cfg or RetrievalConfig()
    lexical = LexicalClassifiers()
    pattern_classifier = pattern_classifier or lexical
    event_classifier = event_classifier or lexical

    scored = sparse_retrieve(query, store, cfg, scorer=scorer, pool=input)
    candidates = [se.event for se in scored]
    if not candidates:
        return []

    patterns = mine_patterns(candidates, cfg)
    for pattern in patterns:
        matching = [e for e in candidates if pattern.matches(e)]
        pattern.label = pattern_classifier.classify_pattern(query, pattern, matching)
    application = apply_pattern_labels(candidates, patterns)
    kept = application.bypass + classify_remaining(query, application.partial, event_classifier)
    kept.sort(key=lambda e: (e.span.start, e.id))
    return deduplicate(kept, cfg)
