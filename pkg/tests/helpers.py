"""Shared test utilities: independent oracles and a scripted-session driver.

The oracles here deliberately re-derive results by a different route than the
implementation: retrieval by per-segment ``math.fsum`` cosine, reassembly by
char-span stitching, edit distance by a full-matrix DP.
"""

from __future__ import annotations

import math
import random
from datetime import datetime, timedelta, timezone

import numpy as np

from visitprep.embeddings import EmbeddingProvider, embed_texts
from visitprep.interview import InterviewEngine, SessionState
from visitprep.vector_index import VectorIndex

# --- retrieval oracle -------------------------------------------------------


def oracle_cosine(a, b) -> float:
    dot = math.fsum(float(x) * float(y) for x, y in zip(a, b))
    norm_a = math.sqrt(math.fsum(float(x) * float(x) for x in a))
    norm_b = math.sqrt(math.fsum(float(y) * float(y) for y in b))
    return dot / (norm_a * norm_b)


def oracle_retrieve(
    query_text: str, k: int, index: VectorIndex, provider: EmbeddingProvider
) -> list[tuple[str, float]]:
    """Exhaustive cosine ranking over the stored vectors, tie-break by id."""
    query = embed_texts([query_text], provider)[0]
    query64 = np.asarray(query, dtype=np.float64)
    scored = []
    for row, segment in enumerate(index.segments):
        stored = index.vectors[row].astype(np.float64)
        scored.append((segment.segment_id, oracle_cosine(stored, query64)))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[: min(k, len(scored))]


def oracle_max_cosine(
    query_text: str, index: VectorIndex, provider: EmbeddingProvider
) -> float:
    return max(score for _, score in oracle_retrieve(query_text, index.segment_count, index, provider))


# --- segmentation reassembly oracle ----------------------------------------


def reassemble(segments) -> str:
    """Stitch segments back together by char spans, stripping the overlaps."""
    ordered = sorted(segments, key=lambda s: s.char_span[0])
    result = []
    covered_to = 0
    for seg in ordered:
        start, end = seg.char_span
        assert start <= covered_to, f"gap before span {seg.char_span}"
        if end <= covered_to:
            continue
        result.append(seg.text[covered_to - start:])
        covered_to = end
    return "".join(result)


# --- edit-distance oracle ----------------------------------------------------


def oracle_levenshtein(a: list[str], b: list[str]) -> int:
    """Full-matrix token Levenshtein, independent of the two-row version."""
    rows, cols = len(a) + 1, len(b) + 1
    matrix = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        matrix[i][0] = i
    for j in range(cols):
        matrix[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            cost = 0 if a[i - 1] == b[j - 1] else 1
            matrix[i][j] = min(
                matrix[i - 1][j] + 1,
                matrix[i][j - 1] + 1,
                matrix[i - 1][j - 1] + cost,
            )
    return matrix[rows - 1][cols - 1]


# --- scripted sessions -------------------------------------------------------

CORPUS_PHRASES = [
    "I keep hearing about Alpha Therapy and Beta Procedure but not how they differ.",
    "Nobody explained what Watchful Monitoring involves between visits.",
    "I am unsure what my insurance plan covers after the prior-approval step.",
    "I do not know how often the K-level testing happens after treatment.",
    "I read that recovery from Beta Procedure is slower but I am not sure.",
    "I wonder whether eating differently would change how treatment goes.",
    "I feel worried between appointments and do not know if that is normal.",
]

PERSONAL_PHRASES = [
    "Mostly it matters that life at home stays steady.",
    "Staying close to family through treatment is the biggest thing.",
    "Keeping work going through treatment matters a lot.",
    "Avoiding a long hospital stay would be a relief.",
    "Cost surprises are what worry me the most.",
    "Feeling certain before choosing matters more than speed.",
]

TOPIC_POOLS = [
    ["treatment_plan"],
    ["treatment_plan", "insurance_financial"],
    ["diagnosis_screening", "long_term_management"],
    ["treatment_plan", "nutrition_diet", "emotional_mental_health"],
    ["other_concerns"],
    ["physical_wellness", "treatment_plan"],
]


def run_scripted_session(
    engine: InterviewEngine,
    seed: int,
    edit: bool | None = None,
    base_time: datetime | None = None,
) -> SessionState:
    """Drive one complete session deterministically from a seed."""
    rng = random.Random(seed)
    tick = base_time or datetime(2026, 3, 1, 9, 0, 0, tzinfo=timezone.utc)

    def next_time() -> datetime:
        nonlocal tick
        tick = tick + timedelta(seconds=rng.randint(5, 90))
        return tick

    state = engine.start_session(session_id=f"scripted-{seed}", at=next_time())
    topics = rng.choice(TOPIC_POOLS)
    other_label = "care logistics" if "other_concerns" in topics else None
    engine.select_topics(state, topics, other_label=other_label, at=next_time())

    for _ in range(engine.config.min_elicit_turns):
        engine.submit_response(state, rng.choice(CORPUS_PHRASES), at=next_time())

    prompts = engine.reflection_prompts(state, at=next_time())
    for _ in prompts:
        engine.submit_response(state, rng.choice(PERSONAL_PHRASES), at=next_time())

    engine.request_journey(state, at=next_time())
    do_edit = rng.random() < 0.5 if edit is None else edit
    if do_edit:
        assert state.narrative is not None
        engine.apply_edit(
            state,
            state.narrative.original_text + " I also want to talk about timing.",
            at=next_time(),
        )
    engine.confirm_narrative(state, at=next_time())
    return state
