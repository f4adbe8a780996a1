"""Retrieval logging and citation-closure helpers.

Grounding closure is the mechanical check behind every generated artifact:
ids cited by generated content must be a subset of ids actually retrieved for
that generation. Each retrieve() call made on behalf of a session is recorded
so the closure is auditable after the fact.
"""

from __future__ import annotations

from dataclasses import dataclass

from visitprep.vector_index import RetrievalHit, VectorIndex


@dataclass(frozen=True)
class RetrievalRecord:
    purpose: str  # e.g. "panel_gap", "question_classify"
    query: str
    hits: tuple[RetrievalHit, ...]

    def to_dict(self) -> dict:
        return {
            "purpose": self.purpose,
            "query": self.query,
            "hits": [
                {"segment_id": h.segment_id, "score": h.score, "rank": h.rank}
                for h in self.hits
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RetrievalRecord":
        return cls(
            purpose=data["purpose"],
            query=data["query"],
            hits=tuple(
                RetrievalHit(h["segment_id"], h["score"], h["rank"]) for h in data["hits"]
            ),
        )


def union_best_hits(records: list[RetrievalRecord]) -> dict[str, float]:
    """Best score per segment_id across records."""
    best: dict[str, float] = {}
    for record in records:
        for hit in record.hits:
            if hit.segment_id not in best or hit.score > best[hit.segment_id]:
                best[hit.segment_id] = hit.score
    return best


def context_items(
    best_hits: dict[str, float], index: VectorIndex, min_score: float = 0.0
) -> list[tuple[str, str]]:
    """(segment_id, text) pairs ordered by score descending, id ascending."""
    ordered = sorted(best_hits.items(), key=lambda kv: (-kv[1], kv[0]))
    return [
        (segment_id, index.segment(segment_id).text)
        for segment_id, score in ordered
        if score > min_score
    ]


def retrieved_ids(records: list[RetrievalRecord]) -> set[str]:
    return {hit.segment_id for record in records for hit in record.hits}
