"""Acceptance suite: every release criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``. Each criterion prints
``ACCEPTANCE <name>: PASS`` (or FAIL with the triggering assertion) so the
suite doubles as a release checklist. Everything runs offline against the
deterministic stub providers.
"""

import random
import time
from contextlib import contextmanager
from datetime import datetime, timezone

import numpy as np
import pytest

from helpers import (
    oracle_levenshtein,
    oracle_max_cosine,
    oracle_retrieve,
    reassemble,
    run_scripted_session,
)
from visitprep.conversation import ALLOWED_TRANSITIONS, SessionStage
from visitprep.embeddings import StubEmbeddingProvider, embed_texts
from visitprep.errors import ReflectionIncomplete, VisitPrepError, WrongStage
from visitprep.events import JsonlEventLog
from visitprep.gateway import Gateway
from visitprep.ingest import (
    BoundaryPreference,
    SegmentationConfig,
    normalize_text,
    segment_page,
)
from visitprep.interview import EngineConfig, InterviewEngine
from visitprep.narrative import token_change_fraction
from visitprep.prompts import build_stub_generation_provider
from visitprep.questions import QuestionKind, classify_answerability
from visitprep.replay import replay_session
from visitprep.service.jobs import IndexHolder, IngestManager, IngestStatus
from visitprep.vector_index import build_index, load_index, retrieve, save_index

WORD_POOL_A = [f"alpha{i}" for i in range(300)]
WORD_POOL_B = [f"zeta{i}" for i in range(300)]


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def build_random_index(rng: random.Random, n_segments: int, provider, pool=WORD_POOL_A):
    segments = []
    page = 0
    while len(segments) < n_segments:
        page += 1
        text = " ".join(rng.choice(pool) for _ in range(rng.randint(5, 30)))
        segments.extend(segment_page("rnd", page, text, SegmentationConfig()))
    segments = segments[:n_segments]
    vectors = embed_texts([s.text for s in segments], provider)
    return build_index(segments, vectors, provider.provider_tag)


# ---------------------------------------------------------------------------


def test_retrieval_oracle_equivalence(stub_embed):
    """retrieve() == exhaustive cosine ranking on 20 random corpora, < 10 s."""
    with criterion("retrieval-oracle-equivalence"):
        rng = random.Random(20260301)
        started = time.monotonic()
        mismatches = 0
        for corpus_no in range(20):
            index = build_random_index(rng, rng.randint(5, 500), stub_embed)
            for _ in range(3):
                query = " ".join(rng.choice(WORD_POOL_A) for _ in range(6))
                for k in (1, 5, 20):
                    hits = retrieve(query, k, index, stub_embed)
                    expected = oracle_retrieve(query, k, index, stub_embed)
                    if [h.segment_id for h in hits] != [sid for sid, _ in expected]:
                        mismatches += 1
                        continue
                    for hit, (_, score) in zip(hits, expected):
                        assert hit.score == pytest.approx(score, abs=1e-9)
                        assert -1.0 - 1e-9 <= hit.score <= 1.0 + 1e-9
        elapsed = time.monotonic() - started
        assert mismatches == 0
        assert elapsed < 10.0, f"retrieval acceptance took {elapsed:.1f}s"


def test_segmentation_losslessness():
    """50 generated pages reassemble exactly; segment sizes bounded."""
    with criterion("segmentation-losslessness"):
        rng = random.Random(42)
        for page_no in range(50):
            length = rng.choice([0, 1, 17, 100] + [rng.randint(0, 10_000) for _ in range(3)])
            words = []
            total = 0
            while total < length:
                word = "".join(rng.choice("abcdefg") for _ in range(rng.randint(1, 10)))
                if rng.random() < 0.15:
                    word += rng.choice(".!?")
                if rng.random() < 0.03:
                    word += "\n\n"
                words.append(word)
                total += len(word) + 1
            text = " ".join(words)[:length]
            max_chars = rng.randint(40, 2000)
            config = SegmentationConfig(
                max_chars=max_chars,
                overlap_chars=rng.randint(0, int(max_chars * 0.7)),
                boundary_preference=rng.choice(list(BoundaryPreference)),
            )
            segments = segment_page("b", page_no, text, config)
            normalized = normalize_text(text)
            if normalized:
                assert reassemble(segments) == normalized
            else:
                assert segments == []
            for segment in segments:
                assert len(segment.text) <= config.max_chars


def test_index_persistence_round_trip(stub_embed, tmp_path):
    """save -> load is bit-exact (checksummed) on 10 random indexes."""
    with criterion("index-persistence-round-trip"):
        rng = random.Random(7)
        for i in range(10):
            index = build_random_index(rng, rng.randint(3, 80), stub_embed)
            target = tmp_path / f"idx{i}"
            save_index(index, target)
            loaded = load_index(target)
            assert np.array_equal(loaded.vectors, index.vectors)
            assert loaded.vectors.dtype == index.vectors.dtype
            assert loaded.manifest == index.manifest
            assert [s.to_dict() for s in loaded.segments] == [
                s.to_dict() for s in index.segments
            ]


def test_state_machine_gates(sample_index, stub_embed):
    """200 random op sequences never leave the documented stage path."""
    with criterion("state-machine-gates"):
        rng = random.Random(1234)
        for round_no in range(200):
            gateway = Gateway(build_stub_generation_provider())
            engine = InterviewEngine(
                lambda: sample_index, stub_embed, gateway, config=EngineConfig()
            )
            state = engine.start_session()
            ops = [
                lambda: engine.select_topics(state, ["treatment_plan", "nutrition_diet"]),
                lambda: engine.submit_response(
                    state, rng.choice(["I know about Alpha Therapy.", "Costs are unclear to me."])
                ),
                lambda: engine.reflection_prompts(state),
                lambda: engine.request_journey(state),
                lambda: engine.apply_edit(state, "I rewrote my journey about Treatment Plan."),
                lambda: engine.confirm_narrative(state),
                lambda: engine.refresh_panel(state),
                lambda: engine.close_session(state),
            ]
            for _ in range(rng.randint(4, 16)):
                before = state.stage
                op = rng.choice(ops)
                try:
                    op()
                except VisitPrepError:
                    assert state.stage is before, "failed op must not change stage"
                else:
                    after = state.stage
                    assert after is before or ALLOWED_TRANSITIONS.get(before) is after, (
                        f"undocumented transition {before} -> {after}"
                    )
                # stage/artifact coherence
                review_on = SessionStage.REVIEW_KNOWLEDGE
                assert (state.panel is not None) == (
                    list(SessionStage).index(state.stage) >= list(SessionStage).index(review_on)
                )
                assert (state.narrative is not None) == (
                    list(SessionStage).index(state.stage)
                    >= list(SessionStage).index(SessionStage.NARRATIVE_DRAFT)
                )
                assert (state.questions is not None) == (
                    state.stage in (SessionStage.QUESTIONS_READY, SessionStage.CLOSED)
                )

        # premature requests always yield the documented errors
        gateway = Gateway(build_stub_generation_provider())
        engine = InterviewEngine(lambda: sample_index, stub_embed, gateway)
        state = engine.start_session()
        with pytest.raises(WrongStage):
            engine.request_journey(state)
        with pytest.raises(WrongStage):
            engine.confirm_narrative(state)
        engine.select_topics(state, ["treatment_plan"])
        engine.submit_response(state, "I know about Alpha Therapy sessions.")
        engine.submit_response(state, "I am unsure about recovery times.")
        engine.reflection_prompts(state)
        with pytest.raises(ReflectionIncomplete):
            engine.request_journey(state)


@pytest.fixture(scope="module")
def scripted_sessions(sample_index, stub_embed, tmp_path_factory):
    """20 scripted end-to-end sessions with persisted event logs."""
    data_dir = tmp_path_factory.mktemp("acceptance-events")
    log = JsonlEventLog(data_dir)
    gateway = Gateway(build_stub_generation_provider())
    engine = InterviewEngine(
        lambda: sample_index, stub_embed, gateway, config=EngineConfig(), recorder=log
    )
    sessions = [run_scripted_session(engine, seed=seed) for seed in range(20)]
    return sessions, log, sample_index, stub_embed


def test_event_replay_determinism(scripted_sessions):
    """Replaying each of the 20 session logs reproduces state exactly."""
    with criterion("event-replay-determinism"):
        sessions, log, index, embed = scripted_sessions
        for state in sessions:
            replayer = InterviewEngine(
                lambda: index,
                embed,
                Gateway(build_stub_generation_provider()),
                config=EngineConfig(),
            )
            rebuilt = replay_session(log.session_events(state.session_id), replayer)
            assert rebuilt == state, f"replay diverged for {state.session_id}"


def test_edit_metric_oracle():
    """token_change_fraction matches an independent Levenshtein on 500 pairs."""
    with criterion("edit-metric-oracle"):
        rng = random.Random(555)
        vocab = ["north", "south", "east", "west", "walk", "ride", "stay", "go"]
        for i in range(500):
            a_tokens = [rng.choice(vocab) for _ in range(rng.randint(1, 40))]
            if i % 5 == 0:
                b_tokens = list(a_tokens)  # identity pairs
            else:
                b_tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 40))]
            a, b = " ".join(a_tokens), " ".join(b_tokens)
            expected = oracle_levenshtein(a_tokens, b_tokens) / len(a_tokens)
            actual = token_change_fraction(a, b)
            assert abs(actual - expected) <= 1e-12
            if a_tokens == b_tokens:
                assert actual == 0.0


def test_answerability_partition(stub_embed):
    """Seeded 10 in-corpus / 10 out-of-corpus questions split exactly at 0.60."""
    with criterion("answerability-partition"):
        rng = random.Random(31337)
        index = build_random_index(rng, 40, stub_embed, pool=WORD_POOL_A)
        in_corpus = []
        for i in range(10):
            seg = index.segments[rng.randrange(index.segment_count)]
            if i < 5:
                in_corpus.append(seg.text)  # verbatim
            else:  # near-verbatim: one token swapped
                tokens = seg.text.split()
                tokens[rng.randrange(len(tokens))] = rng.choice(WORD_POOL_B)
                in_corpus.append(" ".join(tokens))
        out_corpus = [
            " ".join(rng.choice(WORD_POOL_B) for _ in range(rng.randint(6, 14)))
            for _ in range(10)
        ]

        know, ask = [], []
        for question in in_corpus + out_corpus:
            kind, _, score = classify_answerability(question, index, stub_embed, threshold=0.60)
            oracle_score = oracle_max_cosine(question, index, stub_embed)
            assert score == pytest.approx(oracle_score, abs=1e-9)
            assert kind is (
                QuestionKind.KNOW_THEM if oracle_score >= 0.60 else QuestionKind.ASK_THEM
            )
            (know if kind is QuestionKind.KNOW_THEM else ask).append(question)
        assert set(know) == set(in_corpus), "intended 10/10 split broken"
        assert set(ask) == set(out_corpus)

        know_sets = []
        for theta in (0.3, 0.6, 0.9):
            know_sets.append(
                {
                    q
                    for q in in_corpus + out_corpus
                    if classify_answerability(q, index, stub_embed, threshold=theta)[0]
                    is QuestionKind.KNOW_THEM
                }
            )
        assert know_sets[2] <= know_sets[1] <= know_sets[0], "threshold monotonicity broken"


def test_output_contract(scripted_sessions):
    """Every scripted session ends with exactly 5 grounded know-them + 5 ask-them."""
    with criterion("output-contract"):
        sessions, _, _, _ = scripted_sessions
        for state in sessions:
            output = state.questions
            assert output is not None
            assert len(output.know_them) == 5
            assert len(output.ask_them) == 5
            hits_by_query = {
                record.query: {hit.segment_id for hit in record.hits}
                for record in state.retrieval_log
                if record.purpose == "question_classify"
            }
            for q in output.know_them:
                assert q.answer and q.sources
                assert set(q.sources) <= hits_by_query[q.text], (
                    f"know-them answer cites outside its own hits: {q.text}"
                )
            for q in output.ask_them:
                assert q.answerability_score < output.threshold_used


def test_grounding_closure(scripted_sessions):
    """All cited segment ids are subsets of the session's logged retrieval hits."""
    with criterion("grounding-closure"):
        sessions, _, _, _ = scripted_sessions
        violations = 0
        for state in sessions:
            logged = {
                hit.segment_id for record in state.retrieval_log for hit in record.hits
            }
            assert state.panel is not None and state.questions is not None
            if not state.panel.cited_segment_ids() <= logged:
                violations += 1
            for q in state.questions.know_them:
                if not set(q.sources) <= logged:
                    violations += 1
        assert violations == 0


def test_ingest_progress_monotonicity(sample_book_dir, tmp_path):
    """A live ingest job polled at 100 ms never shows progress decreasing."""
    with criterion("ingest-progress-monotonicity"):
        book = tmp_path / "big-book"
        book.mkdir()
        rng = random.Random(9090)
        n_pages = 150
        for page_no in range(1, n_pages + 1):
            # unique vocabulary per page keeps the embedding phase honest
            words = [f"pg{page_no}w{i}x{rng.randint(0, 9999)}" for i in range(400)]
            (book / f"{page_no}.txt").write_text(" ".join(words), encoding="utf-8")

        holder = IndexHolder(tmp_path / "index")
        manager = IngestManager(
            holder=holder,
            embed_provider=StubEmbeddingProvider(),  # fresh cache: realistic pace
            segmentation=SegmentationConfig(max_chars=400, overlap_chars=80),
            work_dir=tmp_path / "staging",
        )
        job = manager.submit(book, book_id="big-book")
        observations = []
        deadline = time.monotonic() + 120
        while time.monotonic() < deadline:
            snap = job.snapshot()
            observations.append((snap["status"], snap["progress"]))
            if snap["status"] in ("Done", "Failed"):
                break
            time.sleep(0.1)
        manager.shutdown()

        statuses = [s for s, _ in observations]
        progresses = [p for _, p in observations]
        assert statuses[-1] == "Done", f"terminal state was {statuses[-1]}"
        final = job.snapshot()
        assert final["report"] is not None and final["report"]["page_count"] == n_pages
        assert final["progress"] == 1.0
        for earlier, later in zip(progresses, progresses[1:]):
            assert later >= earlier, f"progress decreased: {earlier} -> {later}"
        assert len(observations) >= 3, "job finished before any meaningful polling"
        assert holder.get() is not None and holder.get().segment_count > 0
        # status order follows the documented pipeline
        order = [s.value for s in IngestStatus]
        indices = [order.index(s) for s in statuses]
        assert indices == sorted(indices)
