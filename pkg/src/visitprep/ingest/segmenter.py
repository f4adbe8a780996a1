"""Overlapping segmentation of normalized page text.

Segments are windows over a page's normalized text, identified by character
spans so that stripping the overlaps and concatenating reproduces the page
text exactly. Segments never cross page boundaries.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from visitprep.errors import InvalidConfig
from visitprep.ingest.pages import PageDocument, normalize_text

_SENTENCE_END = ".!?"


class BoundaryPreference(Enum):
    SENTENCE_END = "SentenceEnd"
    WHITESPACE_ONLY = "WhitespaceOnly"


@dataclass(frozen=True)
class SegmentationConfig:
    max_chars: int = 1200
    overlap_chars: int = 200
    boundary_preference: BoundaryPreference = BoundaryPreference.SENTENCE_END

    def validate(self) -> None:
        if self.max_chars <= 0:
            raise InvalidConfig(f"max_chars must be positive, got {self.max_chars}")
        if self.overlap_chars < 0:
            raise InvalidConfig(f"overlap_chars must be non-negative, got {self.overlap_chars}")
        if self.overlap_chars >= self.max_chars:
            raise InvalidConfig(
                f"overlap_chars ({self.overlap_chars}) must be < max_chars ({self.max_chars})"
            )


@dataclass(frozen=True)
class Segment:
    """An indexed unit of guidebook text with provenance."""

    segment_id: str
    book_id: str
    page_number: int
    char_span: tuple[int, int]
    text: str
    token_estimate: int

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "book_id": self.book_id,
            "page_number": self.page_number,
            "char_span": list(self.char_span),
            "text": self.text,
            "token_estimate": self.token_estimate,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Segment":
        return cls(
            segment_id=data["segment_id"],
            book_id=data["book_id"],
            page_number=data["page_number"],
            char_span=(data["char_span"][0], data["char_span"][1]),
            text=data["text"],
            token_estimate=data["token_estimate"],
        )


def make_segment_id(book_id: str, page_number: int, start: int, end: int) -> str:
    key = f"{book_id}|{page_number}|{start}|{end}".encode("utf-8")
    return hashlib.sha256(key).hexdigest()[:16]


def segment_text(pages: Iterable[PageDocument], config: SegmentationConfig) -> list[Segment]:
    """Segment every page; spans index into each page's normalized text."""
    config.validate()
    segments: list[Segment] = []
    for page in pages:
        segments.extend(segment_page(page.book_id, page.page_number, page.raw_text, config))
    return segments


def segment_page(
    book_id: str, page_number: int, text: str, config: SegmentationConfig
) -> list[Segment]:
    config.validate()
    normalized = normalize_text(text)
    spans = _split_spans(normalized, config)
    segments = []
    for start, end in spans:
        chunk = normalized[start:end]
        segments.append(
            Segment(
                segment_id=make_segment_id(book_id, page_number, start, end),
                book_id=book_id,
                page_number=page_number,
                char_span=(start, end),
                text=chunk,
                token_estimate=len(chunk.split()),
            )
        )
    return segments


def _split_spans(text: str, config: SegmentationConfig) -> list[tuple[int, int]]:
    n = len(text)
    if n == 0:
        return []
    if n <= config.max_chars:
        return [(0, n)]

    spans: list[tuple[int, int]] = []
    start = 0
    while True:
        hard_end = start + config.max_chars
        if hard_end >= n:
            spans.append((start, n))
            return spans
        end = _choose_end(text, start, hard_end, config)
        spans.append((start, end))
        next_start = end - config.overlap_chars
        if config.boundary_preference is BoundaryPreference.SENTENCE_END:
            # Starting on a sentence boundary shrinks the overlap, never grows it.
            adjusted = _next_sentence_start(text, next_start, end)
            if adjusted is not None:
                next_start = adjusted
        start = next_start


def _choose_end(text: str, start: int, hard_end: int, config: SegmentationConfig) -> int:
    # The next segment starts at end - overlap_chars; end must clear
    # start + overlap_chars or the split would stop making progress.
    min_end = start + config.overlap_chars + 1
    if config.boundary_preference is BoundaryPreference.SENTENCE_END:
        for pos in range(hard_end, min_end - 1, -1):
            if text[pos - 1] in _SENTENCE_END and (pos == len(text) or text[pos].isspace()):
                return pos
    for pos in range(hard_end, min_end - 1, -1):
        if text[pos].isspace() and not text[pos - 1].isspace():
            return pos
    return hard_end


def _next_sentence_start(text: str, low: int, high: int) -> int | None:
    """First position in [low, high) that begins a sentence, or None."""
    for pos in range(max(low, 0), high):
        if pos == 0:
            return 0
        if text[pos - 1].isspace() and pos >= 2 and text[pos - 2] in _SENTENCE_END:
            return pos
    return None
