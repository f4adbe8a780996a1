"""Knowledge panel generation: background, decision factors, option grid.

The first retrieval-augmented stage. Gap queries distilled from the interview
drive retrieval; the union of retrieved segments is the only corpus context
the generator sees, and every citation must point back into it (one
regeneration attempt, then the build fails loudly).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from visitprep import prompts
from visitprep.conversation import TranscriptEntry, patient_turns, render_transcript
from visitprep.embeddings import EmbeddingProvider
from visitprep.errors import EmptyTranscript, GroundingViolation, SchemaViolation
from visitprep.gateway import Gateway
from visitprep.grounding import RetrievalRecord, context_items, union_best_hits
from visitprep.prompts import NOT_COVERED, REQUIRED_DIMENSIONS
from visitprep.vector_index import VectorIndex, retrieve

logger = logging.getLogger(__name__)

DEFAULT_K = 6
MAX_GAPS = 5


@dataclass(frozen=True)
class DecisionFactor:
    text: str
    sources: tuple[str, ...]


@dataclass(frozen=True)
class OptionGridCell:
    option: str
    dimension: str
    text: str
    sources: tuple[str, ...]

    @property
    def covered(self) -> bool:
        return self.text != NOT_COVERED


@dataclass(frozen=True)
class OptionGrid:
    options: tuple[str, ...]
    dimensions: tuple[str, ...]
    cells: tuple[OptionGridCell, ...]


@dataclass(frozen=True)
class KnowledgePanel:
    background_summary: str
    decision_factors: tuple[DecisionFactor, ...]
    option_grid: OptionGrid
    generated_from: tuple[str, ...]

    def cited_segment_ids(self) -> set[str]:
        cited = {sid for factor in self.decision_factors for sid in factor.sources}
        cited.update(sid for cell in self.option_grid.cells for sid in cell.sources)
        return cited

    def to_dict(self) -> dict:
        return {
            "background_summary": self.background_summary,
            "decision_factors": [
                {"text": f.text, "sources": list(f.sources)} for f in self.decision_factors
            ],
            "option_grid": {
                "options": list(self.option_grid.options),
                "dimensions": list(self.option_grid.dimensions),
                "cells": [
                    {
                        "option": c.option,
                        "dimension": c.dimension,
                        "text": c.text,
                        "sources": list(c.sources),
                    }
                    for c in self.option_grid.cells
                ],
            },
            "generated_from": list(self.generated_from),
        }


def identify_knowledge_gaps(
    transcript: list[TranscriptEntry],
    topic_names: list[str],
    gateway: Gateway,
    max_gaps: int = MAX_GAPS,
) -> list[str]:
    """Distill the interview into 1-5 retrievable gap queries."""
    turns = patient_turns(transcript)
    if not turns:
        raise EmptyTranscript("cannot identify knowledge gaps without patient responses")
    result = gateway.generate_structured(
        prompts.GAP_QUERIES,
        {
            "topics": "\n".join(topic_names),
            "transcript": render_transcript(transcript),
            "patient_turns": "\n".join(" ".join(t.split()) for t in turns),
        },
    )
    queries: list[str] = []
    for query in result.fields["queries"]:
        query = query.strip()
        if query and query not in queries:
            queries.append(query)
    if not queries:
        queries = list(topic_names)  # degenerate model output: fall back to topics
    return queries[:max_gaps]


def build_panel(
    transcript: list[TranscriptEntry],
    topic_names: list[str],
    index: VectorIndex,
    embed_provider: EmbeddingProvider,
    gateway: Gateway,
    k: int = DEFAULT_K,
) -> tuple[KnowledgePanel, list[RetrievalRecord]]:
    """Generate the panel from gap-driven retrieval; returns it with the retrieval log."""
    gaps = identify_knowledge_gaps(transcript, topic_names, gateway)
    records = [
        RetrievalRecord("panel_gap", gap, tuple(retrieve(gap, k, index, embed_provider)))
        for gap in gaps
    ]
    best = union_best_hits(records)
    items = context_items(best, index, min_score=0.0)
    allowed = {segment_id for segment_id, _ in items}

    bindings = {
        "topics": "\n".join(topic_names),
        "transcript": render_transcript(transcript),
        "context": prompts.format_context(items),
        "reminder": "",
    }
    last_problem: Exception | None = None
    for attempt in (1, 2):
        result = gateway.generate_structured(prompts.KNOWLEDGE_PANEL, bindings)
        try:
            panel = _assemble_panel(result.fields, allowed, generated_from=tuple(best))
        except (GroundingViolation, SchemaViolation) as exc:
            logger.warning("panel attempt %d rejected: %s", attempt, exc.message)
            last_problem = exc
            bindings = {
                **bindings,
                "reminder": (
                    "\n\nIMPORTANT: cite only ids that appear in the excerpts above, "
                    "cover every option x dimension pair exactly once, and use "
                    f'"{NOT_COVERED}" (no sources) for anything the excerpts lack.'
                ),
            }
            continue
        return panel, records
    assert last_problem is not None
    raise last_problem


def _assemble_panel(
    fields: dict, allowed: set[str], generated_from: tuple[str, ...]
) -> KnowledgePanel:
    background = fields["background_summary"].strip()
    if not background:
        raise SchemaViolation("panel background summary is empty")

    factors = []
    for row in fields["decision_factors"]:
        text = str(row.get("text", "")).strip()
        sources = tuple(str(s) for s in row.get("sources", []))
        if not text:
            raise SchemaViolation("decision factor with empty text")
        if not sources:
            raise GroundingViolation(f"decision factor cites nothing: {text[:60]!r}")
        _check_citations(sources, allowed, f"decision factor {text[:40]!r}")
        factors.append(DecisionFactor(text=text, sources=sources))

    options = tuple(str(o).strip() for o in fields["options"] if str(o).strip())
    dimensions = tuple(str(d).strip() for d in fields["dimensions"] if str(d).strip())
    if len(set(options)) != len(options) or len(set(dimensions)) != len(dimensions):
        raise SchemaViolation("duplicate option or dimension names in grid")
    lowered = {d.lower() for d in dimensions}
    missing = [d for d in REQUIRED_DIMENSIONS if d not in lowered]
    if missing:
        raise SchemaViolation(f"option grid lacks required dimensions: {missing}")

    cells = []
    seen_pairs = set()
    for row in fields["cells"]:
        option = str(row.get("option", "")).strip()
        dimension = str(row.get("dimension", "")).strip()
        text = str(row.get("text", "")).strip()
        sources = tuple(str(s) for s in row.get("sources", []))
        if option not in options or dimension not in dimensions:
            raise SchemaViolation(f"cell refers to unknown option/dimension: {option!r}/{dimension!r}")
        if (option, dimension) in seen_pairs:
            raise SchemaViolation(f"duplicate cell for {option!r}/{dimension!r}")
        seen_pairs.add((option, dimension))
        if text == NOT_COVERED:
            if sources:
                raise SchemaViolation("a not-covered cell must not cite sources")
        else:
            if not text:
                raise SchemaViolation(f"empty cell text for {option!r}/{dimension!r}")
            if not sources:
                raise GroundingViolation(
                    f"covered cell {option!r}/{dimension!r} cites nothing"
                )
            _check_citations(sources, allowed, f"cell {option!r}/{dimension!r}")
        cells.append(OptionGridCell(option=option, dimension=dimension, text=text, sources=sources))

    if len(cells) != len(options) * len(dimensions):
        raise SchemaViolation(
            f"option grid is not rectangular: {len(cells)} cells for "
            f"{len(options)} options x {len(dimensions)} dimensions"
        )

    return KnowledgePanel(
        background_summary=background,
        decision_factors=tuple(factors),
        option_grid=OptionGrid(options=options, dimensions=dimensions, cells=tuple(cells)),
        generated_from=generated_from,
    )


def _check_citations(sources: tuple[str, ...], allowed: set[str], what: str) -> None:
    stray = [s for s in sources if s not in allowed]
    if stray:
        raise GroundingViolation(
            f"{what} cites segments outside the retrieved context: {stray}",
            details={"stray": stray},
        )
