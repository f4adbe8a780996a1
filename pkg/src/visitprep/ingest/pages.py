"""Page discovery and text extraction for guidebook folders.

A book is a directory of files named ``<page_number>.<ext>``. Extraction is
pluggable per extension so test corpora can use plain-text pages while real
deployments feed PDFs.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol

from visitprep.errors import DuplicatePageNumber, EmptyFolder, UnparseableDocument
from visitprep.ingest import pdftext

logger = logging.getLogger(__name__)

_PAGE_FILE_RE = re.compile(r"^(\d+)$")


def normalize_text(raw: str) -> str:
    """Collapse whitespace runs to single spaces, keep paragraph breaks as newlines.

    A whitespace run containing a newline is a paragraph break and becomes one
    ``\\n``; every other run becomes one space. Leading/trailing whitespace is
    stripped. Idempotent, so re-normalizing already-normalized text (as the
    segmenter does) is a no-op. Extractors that see intra-paragraph line wraps
    (the PDF path) emit spaces for them, not newlines.
    """
    def _replace(match: re.Match[str]) -> str:
        return "\n" if "\n" in match.group(0) else " "

    return re.sub(r"\s+", _replace, raw).strip()


@dataclass(frozen=True)
class PageDocument:
    """One extracted guidebook page; ``raw_text`` may be empty for blank pages."""

    book_id: str
    page_number: int
    raw_text: str


class PageExtractor(Protocol):
    def __call__(self, data: bytes) -> str: ...


def extract_plain_text(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise UnparseableDocument(f"not valid UTF-8 text: {exc}") from exc


def extract_pdf_text(data: bytes) -> str:
    return pdftext.extract_text(data)


# Backwards-friendly aliases for configuring extractor maps explicitly.
PlainTextExtractor = extract_plain_text
PdfTextExtractor = extract_pdf_text


def default_extractors() -> dict[str, PageExtractor]:
    return {".txt": extract_plain_text, ".pdf": extract_pdf_text}


def extract_page_text(data: bytes, extractor: PageExtractor = extract_pdf_text) -> str:
    """Extract running text from one page and normalize its whitespace."""
    return normalize_text(extractor(data))


@dataclass(frozen=True)
class FailedPage:
    filename: str
    page_number: int
    reason: str


@dataclass
class BookScan:
    """Result of scanning one book folder: ordered pages plus skip/failure info."""

    book_id: str
    pages: list[PageDocument] = field(default_factory=list)
    skipped_files: list[str] = field(default_factory=list)
    failed_pages: list[FailedPage] = field(default_factory=list)


def scan_book_folder(
    path: str | Path,
    book_id: str | None = None,
    extractors: Mapping[str, PageExtractor] | None = None,
    on_page: Callable[[int, int], None] | None = None,
) -> BookScan:
    """Read a folder of ``<page_number>.<ext>`` files into ordered pages.

    Pages are sorted by the numeric filename stem (numeric, not lexicographic).
    Files that do not match the naming rule or have an unsupported extension
    are skipped and reported. A page whose extraction fails is reported in
    ``failed_pages`` and ingestion continues.

    ``on_page(done, total)`` is invoked after each page attempt, for progress
    reporting.
    """
    folder = Path(path)
    if not folder.is_dir():
        raise EmptyFolder(f"not a readable directory: {folder}")
    if extractors is None:
        extractors = default_extractors()

    scan = BookScan(book_id=book_id or folder.name)
    numbered: list[tuple[int, Path]] = []
    seen: dict[int, Path] = {}
    for entry in sorted(folder.iterdir(), key=lambda p: p.name):
        if not entry.is_file():
            continue
        match = _PAGE_FILE_RE.match(entry.stem)
        if match is None or entry.suffix.lower() not in extractors:
            scan.skipped_files.append(entry.name)
            logger.info("skipping non-page file %s", entry.name)
            continue
        page_number = int(match.group(1))
        if page_number in seen:
            raise DuplicatePageNumber(
                f"page {page_number} appears twice: {seen[page_number].name} and {entry.name}",
                details={"page_number": page_number},
            )
        seen[page_number] = entry
        numbered.append((page_number, entry))

    if not numbered:
        raise EmptyFolder(f"no recognizable page files in {folder}")

    numbered.sort(key=lambda item: item[0])
    for done, (page_number, entry) in enumerate(numbered, start=1):
        extractor = extractors[entry.suffix.lower()]
        try:
            text = extract_page_text(entry.read_bytes(), extractor)
        except UnparseableDocument as exc:
            scan.failed_pages.append(FailedPage(entry.name, page_number, exc.message))
            logger.warning("page %s failed extraction: %s", entry.name, exc.message)
        else:
            scan.pages.append(PageDocument(scan.book_id, page_number, text))
        if on_page is not None:
            on_page(done, len(numbered))
    return scan
