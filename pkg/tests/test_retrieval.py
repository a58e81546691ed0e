import json
import random
import threading
from datetime import datetime, timedelta
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from reqap.events import EventStore, make_event, verbalize_event
from reqap.retrieval import (
    EmptyQueryError,
    IRRELEVANT,
    LexicalClassifiers,
    LexicalScorer,
    OracleClassifiers,
    PARTIAL,
    Pattern,
    RELEVANT,
    RetrievalConfig,
    UnlabeledPatternError,
    apply_pattern_labels,
    classify_remaining,
    deduplicate,
    HttpClassifier,
    mine_patterns,
    retrieve,
    sparse_retrieve,
)
from reqap.values import TimeSpan

from conftest import ev


@pytest.fixture()
def small_store():
    return EventStore([
        ev("a", "workout", "2020-01-01T10:00:00", "2020-01-01T11:00:00",
           workout_type="football"),
        ev("b", "calendar", "2020-01-02T10:00:00", "2020-01-02T11:00:00",
           summary="football with friends"),
        ev("c", "mail", "2020-01-03T10:00:00", "2020-01-03T10:00:00",
           subject="taxes", body="please file your taxes"),
        ev("d", "music_stream", "2020-01-04T20:00:00", "2020-01-04T20:03:00",
           title="Quiet Song"),
    ])


def test_exact_token_match(small_store):
    hits = sparse_retrieve("football", small_store)
    assert {se.event.id for se in hits} == {"a", "b"}


def test_absent_token_empty(small_store):
    assert sparse_retrieve("swimming", small_store) == []


def test_empty_query_rejected(small_store):
    with pytest.raises(EmptyQueryError):
        sparse_retrieve("  ", small_store)


def test_scorer_zero_without_shared_tokens(small_store):
    scorer = LexicalScorer(small_store)
    assert scorer.score("football", "nothing shared here") == 0.0
    assert scorer.score("football", "football game") > 0.0


def test_sparse_retrieve_equals_brute_force():
    rng = random.Random(7)
    vocab = ["run", "song", "mail", "food", "gym", "park", "film", "code", "tea", "sun"]
    events = []
    base = datetime(2020, 1, 1)
    for i in range(100):
        words = rng.sample(vocab, rng.randrange(1, 4))
        start = base + timedelta(hours=i)
        events.append(
            ev(f"e{i:03d}", "note", start.isoformat(), start.isoformat(),
               text=" ".join(words))
        )
    store = EventStore(events)
    scorer = LexicalScorer(store)
    cfg = RetrievalConfig()

    got = sparse_retrieve("run", store, cfg, scorer=scorer)

    raw = {e.id: scorer.score("run", verbalize_event(e)) for e in store}
    positive = {i: s for i, s in raw.items() if s > 0}
    top = max(positive.values())
    expected = sorted(
        ((i, s / top) for i, s in positive.items() if s / top > cfg.score_threshold),
        key=lambda pair: (-pair[1], pair[0]),
    )
    assert [(se.event.id, round(se.score, 12)) for se in got] == [
        (i, round(s, 12)) for i, s in expected
    ]


def test_recall_monotone_in_threshold(small_store):
    loose = {se.event.id for se in sparse_retrieve("football friends", small_store,
                                                   RetrievalConfig(score_threshold=0.05))}
    tight = {se.event.id for se in sparse_retrieve("football friends", small_store,
                                                   RetrievalConfig(score_threshold=0.9))}
    assert tight <= loose


# ---------------------------------------------------------------------------
# Pattern mining
# ---------------------------------------------------------------------------


def _pool(n_soccer=7, n_other=3):
    events = []
    base = datetime(2020, 1, 1)
    for i in range(n_soccer):
        start = base + timedelta(days=i)
        events.append(ev(f"s{i}", "workout", start.isoformat(), start.isoformat(),
                         workout_type="soccer"))
    for i in range(n_other):
        start = base + timedelta(days=30 + i)
        events.append(ev(f"o{i}", "mail", start.isoformat(), start.isoformat(),
                         subject=f"mail {i}"))
    return events


def test_mine_patterns_hand_count():
    pool = _pool()
    patterns = mine_patterns(pool, RetrievalConfig(pattern_freq_threshold=0.5))
    kv = [p for p in patterns if p.kind == "key_value"]
    assert len(kv) == 1
    assert (kv[0].key, kv[0].value, kv[0].support) == ("workout_type", "soccer", 7)


def test_whole_source_pattern_per_source():
    patterns = mine_patterns(_pool(), RetrievalConfig(pattern_freq_threshold=0.5))
    sources = [p for p in patterns if p.kind == "whole_source"]
    assert {p.value for p in sources} == {"workout", "mail"}
    assert {p.support for p in sources} == {7, 3}


def test_threshold_one_only_whole_source():
    patterns = mine_patterns(_pool(), RetrievalConfig(pattern_freq_threshold=1.0))
    assert all(p.kind == "whole_source" for p in patterns)


# ---------------------------------------------------------------------------
# Label application (step 3)
# ---------------------------------------------------------------------------


def test_whole_source_irrelevant_drops_source():
    pool = _pool()
    patterns = mine_patterns(pool, RetrievalConfig(pattern_freq_threshold=0.5))
    for pattern in patterns:
        if pattern.kind == "whole_source" and pattern.value == "mail":
            pattern.label = IRRELEVANT
        else:
            pattern.label = RELEVANT
    result = apply_pattern_labels(pool, patterns)
    assert result.dropped == 3
    assert {e.source.value for e in result.kept} == {"workout"}


def test_key_value_irrelevant_drops_matching():
    events = _pool(n_soccer=4, n_other=0)
    extra = [ev("g0", "workout", "2020-02-01T10:00:00", "2020-02-01T11:00:00",
                workout_type="gym")]
    pool = events + extra
    patterns = [
        Pattern("key_value", "workout_type", "gym", 1, label=IRRELEVANT),
        Pattern("whole_source", "source", "workout", 5, label=PARTIAL),
    ]
    result = apply_pattern_labels(pool, patterns)
    assert result.dropped == 0  # keep-wins: gym is also under the partial source pattern
    patterns[1].label = IRRELEVANT
    result = apply_pattern_labels(pool, patterns)
    assert result.dropped == 5


def test_all_relevant_keeps_everything():
    pool = _pool()
    patterns = mine_patterns(pool, RetrievalConfig(pattern_freq_threshold=0.5))
    for pattern in patterns:
        pattern.label = RELEVANT
    result = apply_pattern_labels(pool, patterns)
    assert len(result.kept) == len(pool) and result.dropped == 0
    assert result.partial == []  # relevant coverage bypasses step 4


def test_unlabeled_pattern_rejected():
    pool = _pool()
    patterns = [Pattern("whole_source", "source", "workout", 7)]
    with pytest.raises(UnlabeledPatternError):
        apply_pattern_labels(pool, patterns)


def test_keep_wins_property_random_labels():
    rng = random.Random(11)
    pool = _pool(6, 4)
    patterns = mine_patterns(pool, RetrievalConfig(pattern_freq_threshold=0.3))
    for _ in range(300):
        for pattern in patterns:
            pattern.label = rng.choice((RELEVANT, IRRELEVANT, PARTIAL))
        result = apply_pattern_labels(pool, patterns)
        for event in pool:
            labels = {p.label for p in patterns if p.matches(event)}
            if RELEVANT in labels:
                assert event in result.kept


# ---------------------------------------------------------------------------
# Event classification (step 4)
# ---------------------------------------------------------------------------


def test_oracle_event_classifier():
    pool = _pool()
    oracle = OracleClassifiers({"q": {"s0", "s1"}})
    kept = classify_remaining("q", pool, oracle)
    assert {e.id for e in kept} == {"s0", "s1"}


def test_lexical_event_classifier_content_token():
    lexical = LexicalClassifiers()
    keep = ev("k", "mail", "2020-01-01T10:00:00", "2020-01-01T10:00:00",
              body="we played football at the park")
    drop = ev("d", "mail", "2020-01-01T10:00:00", "2020-01-01T10:00:00",
              body="totally unrelated message")
    made = [
        ev("m1", "calendar", "2020-01-01T09:00:00", "2020-01-01T09:30:00",
           summary="football practice"),
        ev("m2", "note", "2020-01-02T09:00:00", "2020-01-02T09:00:00",
           text="the football is flat"),
        ev("m3", "note", "2020-01-03T09:00:00", "2020-01-03T09:00:00",
           text="water the plants"),
    ]
    query = "football practice"
    assert lexical.classify_event(query, keep)
    assert not lexical.classify_event(query, drop)
    assert [lexical.classify_event(query, e) for e in made] == [True, True, False]


def test_classify_remaining_empty():
    assert classify_remaining("q", [], LexicalClassifiers()) == []


# ---------------------------------------------------------------------------
# De-duplication (step 5)
# ---------------------------------------------------------------------------


def test_merge_overlapping_cross_source():
    a = ev("cal", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00",
           summary="football game")
    b = ev("soc", "social_media", "2020-01-01T10:30:00", "2020-01-01T11:30:00",
           text="great football game")
    merged = deduplicate([a, b])
    assert len(merged) == 1
    event = merged[0]
    assert event.span.start == datetime(2020, 1, 1, 10, 0)
    assert event.span.end == datetime(2020, 1, 1, 11, 30)
    assert event.attrs["summary"] == "football game"
    assert event.attrs["text"] == "great football game"
    assert event.provenance == frozenset({"cal", "soc"})


def test_disjoint_events_unchanged():
    a = ev("a", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00")
    b = ev("b", "mail", "2020-01-02T10:00:00", "2020-01-02T11:00:00")
    assert [e.id for e in deduplicate([a, b])] == ["a", "b"]


def test_same_source_overlap_not_merged():
    a = ev("a", "music_stream", "2020-01-01T10:00:00", "2020-01-01T10:03:00", title="X")
    b = ev("b", "music_stream", "2020-01-01T10:02:00", "2020-01-01T10:05:00", title="Y")
    assert len(deduplicate([a, b])) == 2


def test_chain_merges_transitively():
    a = ev("a", "calendar", "2020-01-01T10:00:00", "2020-01-01T11:00:00")
    b = ev("b", "mail", "2020-01-01T10:50:00", "2020-01-01T12:00:00")
    c = ev("c", "social_media", "2020-01-01T11:50:00", "2020-01-01T13:00:00")
    merged = deduplicate([a, b, c])
    assert len(merged) == 1
    assert merged[0].span.start == a.span.start
    assert merged[0].span.end == c.span.end


def test_conflicting_key_suffixed_with_loser_source():
    long = ev("l", "calendar", "2020-01-01T10:00:00", "2020-01-01T12:00:00",
              summary="long version")
    short = ev("s", "mail", "2020-01-01T10:30:00", "2020-01-01T10:30:00",
               summary="short version")
    merged = deduplicate([long, short])[0]
    assert merged.attrs["summary"] == "long version"
    assert merged.attrs["summary__mail"] == "short version"
    assert merged.attrs["source"] == "calendar"


def _random_interval_set(rng):
    events = []
    base = datetime(2020, 1, 1)
    for i in range(rng.randrange(2, 12)):
        start = base + timedelta(minutes=rng.randrange(0, 300))
        end = start + timedelta(minutes=rng.randrange(0, 90))
        source = rng.choice(("calendar", "mail", "social_media", "workout"))
        events.append(ev(f"e{i}", source, start.isoformat(), end.isoformat(), k=str(i)))
    return events


def _span_union(events):
    points = set()
    for event in events:
        points.add((event.span.start, event.span.end))
    return points


def _covered(events, instant):
    return any(e.span.start <= instant <= e.span.end for e in events)


def test_dedup_laws_on_random_interval_sets():
    """Idempotence and span conservation, ten thousand random interval sets."""
    rng = random.Random(4242)
    for _ in range(10_000):
        events = _random_interval_set(rng)
        once = deduplicate(events)
        twice = deduplicate(once)
        assert [
            (e.id, e.span.start, e.span.end, e.source) for e in twice
        ] == [(e.id, e.span.start, e.span.end, e.source) for e in once]
        # span conservation probed at all original endpoints
        for event in events:
            for instant in (event.span.start, event.span.end):
                assert _covered(once, instant) == _covered(events, instant)
        # merged spans never extend beyond the originals
        starts = min(e.span.start for e in events)
        ends = max(e.span.end for e in events)
        assert all(starts <= e.span.start and e.span.end <= ends for e in once)


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


def test_double_capture_counts_once(counting_store):
    events = retrieve("I played football", counting_store)
    assert len(events) == 2  # merged match + second workout, not 4 raw captures
    by_provenance = {frozenset(e.provenance) for e in events}
    assert frozenset({"w1", "c1", "s1"}) in by_provenance


def test_retrieve_over_explicit_empty_input(counting_store):
    assert retrieve("football", counting_store, input=[]) == []


def test_retrieve_with_oracle_is_exact(counting_store):
    gold = {"w1", "c1", "s1", "w2"}
    oracle = OracleClassifiers({"I played football": gold})
    events = retrieve(
        "I played football", counting_store,
        pattern_classifier=oracle, event_classifier=oracle,
    )
    provenance = set()
    for event in events:
        provenance |= event.provenance
    assert provenance == gold


# ---------------------------------------------------------------------------
# HTTP classifier plug-in wire format
# ---------------------------------------------------------------------------


class _LabelHandler(BaseHTTPRequestHandler):
    seen = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length).decode("utf-8"))
        type(self).seen.append(payload)
        label = "keep" if "football" in payload["candidate"] else "drop"
        body = json.dumps({"label": label, "score": 0.9}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


def test_http_classifier_wire_contract():
    server = HTTPServer(("127.0.0.1", 0), _LabelHandler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        classifier = HttpClassifier(f"http://127.0.0.1:{server.server_port}/")
        football = ev("a", "workout", "2020-01-01T10:00:00", "2020-01-01T11:00:00",
                      workout_type="football")
        gym = ev("b", "workout", "2020-01-01T12:00:00", "2020-01-01T13:00:00",
                 workout_type="gym")
        assert classifier.classify_event("q", football)
        assert not classifier.classify_event("q", gym)
        assert _LabelHandler.seen[0] == {
            "query": "q",
            "candidate": verbalize_event(football),
        }
    finally:
        server.shutdown()
