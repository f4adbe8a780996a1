"""Ingest report: what a book ingestion produced, serializable for the admin UI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class IngestReport:
    book_id: str
    page_count: int = 0
    segment_count: int = 0
    failed_pages: list[dict] = field(default_factory=list)
    skipped_files: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "book_id": self.book_id,
            "page_count": self.page_count,
            "segment_count": self.segment_count,
            "failed_pages": self.failed_pages,
            "skipped_files": self.skipped_files,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> "IngestReport":
        return cls(
            book_id=data["book_id"],
            page_count=data["page_count"],
            segment_count=data["segment_count"],
            failed_pages=list(data.get("failed_pages", [])),
            skipped_files=list(data.get("skipped_files", [])),
        )
