"""Visit question generation: the second retrieval-augmented stage.

Candidates over-generated from the confirmed narrative and panel are split by
retrieval confidence: the max cosine against the corpus decides whether a
question is answerable from the guidebook (know-them, delivered with a short
grounded answer) or worth bringing to the clinician (ask-them). The output is
always exactly five of each or a structured error.
"""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from enum import Enum

from visitprep import prompts
from visitprep.embeddings import EmbeddingProvider
from visitprep.errors import GroundingViolation, InsufficientCandidates
from visitprep.gateway import Gateway
from visitprep.grounding import RetrievalRecord
from visitprep.panel import KnowledgePanel
from visitprep.vector_index import RetrievalHit, VectorIndex, retrieve

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.60
DEFAULT_CLASSIFY_K = 4
OUTPUT_COUNT = 5


class QuestionKind(str, Enum):
    KNOW_THEM = "KnowThem"
    ASK_THEM = "AskThem"


@dataclass(frozen=True)
class VisitQuestion:
    question_id: str
    kind: QuestionKind
    text: str
    answer: str | None
    sources: tuple[str, ...]
    answerability_score: float

    def to_dict(self) -> dict:
        data = {
            "question_id": self.question_id,
            "kind": self.kind.value,
            "text": self.text,
            "score": self.answerability_score,
        }
        if self.kind is QuestionKind.KNOW_THEM:
            data["answer"] = self.answer
            data["sources"] = list(self.sources)
        return data


@dataclass(frozen=True)
class VisitPrepOutput:
    know_them: tuple[VisitQuestion, ...]
    ask_them: tuple[VisitQuestion, ...]
    threshold_used: float

    def to_dict(self) -> dict:
        return {
            "know_them": [q.to_dict() for q in self.know_them],
            "ask_them": [q.to_dict() for q in self.ask_them],
            "threshold_used": self.threshold_used,
        }


def normalize_question(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip().lower().rstrip("?.! ")


def question_id_for(text: str) -> str:
    return hashlib.sha256(normalize_question(text).encode("utf-8")).hexdigest()[:16]


def generate_candidates(
    narrative_text: str,
    panel: KnowledgePanel,
    gateway: Gateway,
    batch: int = 1,
) -> list[str]:
    """Over-generate candidate questions (target 14-20), deduplicated."""
    result = gateway.generate_structured(
        prompts.VISIT_CANDIDATES,
        {
            "narrative": narrative_text,
            "panel_background": " ".join(panel.background_summary.split()),
            "panel_factors": "\n".join(
                " ".join(f.text.split()) for f in panel.decision_factors
            ),
            "panel_cells": "\n".join(
                " ".join(c.text.split()) for c in panel.option_grid.cells if c.covered
            ),
            "batch": str(batch),
        },
    )
    seen: set[str] = set()
    candidates: list[str] = []
    for question in result.fields["questions"]:
        question = question.strip()
        key = normalize_question(question)
        if question and key and key not in seen:
            seen.add(key)
            candidates.append(question)
    return candidates[:20]


def classify_answerability(
    question_text: str,
    index: VectorIndex,
    embed_provider: EmbeddingProvider,
    threshold: float = DEFAULT_THRESHOLD,
    k: int = DEFAULT_CLASSIFY_K,
) -> tuple[QuestionKind, list[RetrievalHit], float]:
    """Split on retrieval confidence: max top-k cosine vs the threshold."""
    hits = retrieve(question_text, k, index, embed_provider)
    score = max(hit.score for hit in hits)
    kind = QuestionKind.KNOW_THEM if score >= threshold else QuestionKind.ASK_THEM
    return kind, hits, score


def compose_know_them(
    question_text: str,
    hits: list[RetrievalHit],
    index: VectorIndex,
    gateway: Gateway,
    threshold: float = DEFAULT_THRESHOLD,
) -> VisitQuestion:
    """Answer a know-them question from its own retrieval hits only."""
    if not hits:
        raise GroundingViolation("cannot compose an answer without retrieval hits")
    strong_hits = [hit for hit in hits if hit.score >= threshold]
    if not strong_hits:
        raise GroundingViolation(
            f"no retrieval hit reaches the answerability threshold {threshold}"
        )
    items = [(hit.segment_id, index.segment(hit.segment_id).text) for hit in strong_hits]
    allowed = {hit.segment_id for hit in strong_hits}
    bindings = {
        "question": question_text,
        "context": prompts.format_context(items),
        "reminder": "",
    }
    last_error: GroundingViolation | None = None
    for attempt in (1, 2):
        result = gateway.generate_structured(prompts.KNOW_THEM_ANSWER, bindings)
        answer = result.fields["answer"].strip()
        sources = tuple(str(s) for s in result.fields["sources"])
        stray = [s for s in sources if s not in allowed]
        if answer and sources and not stray:
            return VisitQuestion(
                question_id=question_id_for(question_text),
                kind=QuestionKind.KNOW_THEM,
                text=question_text,
                answer=answer,
                sources=sources,
                answerability_score=max(hit.score for hit in hits),
            )
        last_error = GroundingViolation(
            f"answer for {question_text[:60]!r} is empty or cites outside its hits",
            details={"stray": stray, "empty_answer": not answer},
        )
        logger.warning("know-them attempt %d rejected: %s", attempt, last_error.message)
        bindings = {
            **bindings,
            "reminder": "\n\nIMPORTANT: cite only ids from the excerpts above and give a non-empty answer.",
        }
    assert last_error is not None
    raise last_error


@dataclass(frozen=True)
class ClassifiedCandidate:
    text: str
    question_id: str
    kind: QuestionKind
    hits: tuple[RetrievalHit, ...]
    score: float


def assemble_output(
    classified: list[ClassifiedCandidate],
    index: VectorIndex,
    gateway: Gateway,
    threshold: float,
) -> VisitPrepOutput:
    """Select 5 know-them (highest coverage) and 5 ask-them (lowest coverage)."""
    know = [c for c in classified if c.kind is QuestionKind.KNOW_THEM]
    ask = [c for c in classified if c.kind is QuestionKind.ASK_THEM]
    if len(know) < OUTPUT_COUNT or len(ask) < OUTPUT_COUNT:
        raise InsufficientCandidates(
            "not enough candidates per kind",
            details={
                "know_them_deficit": max(0, OUTPUT_COUNT - len(know)),
                "ask_them_deficit": max(0, OUTPUT_COUNT - len(ask)),
            },
        )
    know.sort(key=lambda c: (-c.score, c.question_id))
    ask.sort(key=lambda c: (c.score, c.question_id))

    know_questions = tuple(
        compose_know_them(c.text, list(c.hits), index, gateway, threshold)
        for c in know[:OUTPUT_COUNT]
    )
    ask_questions = tuple(
        VisitQuestion(
            question_id=c.question_id,
            kind=QuestionKind.ASK_THEM,
            text=c.text,
            answer=None,
            sources=(),
            answerability_score=c.score,
        )
        for c in ask[:OUTPUT_COUNT]
    )
    return VisitPrepOutput(
        know_them=know_questions, ask_them=ask_questions, threshold_used=threshold
    )


def generate_visit_questions(
    narrative_text: str,
    panel: KnowledgePanel,
    index: VectorIndex,
    embed_provider: EmbeddingProvider,
    gateway: Gateway,
    threshold: float = DEFAULT_THRESHOLD,
    classify_k: int = DEFAULT_CLASSIFY_K,
) -> tuple[VisitPrepOutput, list[RetrievalRecord]]:
    """Full second stage: candidates, classification, one top-up batch, selection."""
    records: list[RetrievalRecord] = []
    classified: list[ClassifiedCandidate] = []
    seen: set[str] = set()

    def classify_batch(batch: int) -> None:
        for text in generate_candidates(narrative_text, panel, gateway, batch=batch):
            key = normalize_question(text)
            if key in seen:
                continue
            seen.add(key)
            kind, hits, score = classify_answerability(
                text, index, embed_provider, threshold, classify_k
            )
            records.append(RetrievalRecord("question_classify", text, tuple(hits)))
            classified.append(
                ClassifiedCandidate(
                    text=text,
                    question_id=question_id_for(text),
                    kind=kind,
                    hits=tuple(hits),
                    score=score,
                )
            )

    classify_batch(1)
    know_count = sum(1 for c in classified if c.kind is QuestionKind.KNOW_THEM)
    ask_count = len(classified) - know_count
    if know_count < OUTPUT_COUNT or ask_count < OUTPUT_COUNT:
        logger.info(
            "topping up candidates (know=%d, ask=%d)", know_count, ask_count
        )
        classify_batch(2)

    output = assemble_output(classified, index, gateway, threshold)
    return output, records
