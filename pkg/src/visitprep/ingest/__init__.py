"""Guidebook ingestion: per-page documents in, provenance-tagged segments out."""

from visitprep.ingest.pages import (
    BookScan,
    FailedPage,
    PageDocument,
    PageExtractor,
    PdfTextExtractor,
    PlainTextExtractor,
    default_extractors,
    extract_page_text,
    normalize_text,
    scan_book_folder,
)
from visitprep.ingest.report import IngestReport
from visitprep.ingest.segmenter import (
    BoundaryPreference,
    Segment,
    SegmentationConfig,
    segment_page,
    segment_text,
)

__all__ = [
    "BookScan",
    "BoundaryPreference",
    "FailedPage",
    "IngestReport",
    "PageDocument",
    "PageExtractor",
    "PdfTextExtractor",
    "PlainTextExtractor",
    "Segment",
    "SegmentationConfig",
    "default_extractors",
    "extract_page_text",
    "normalize_text",
    "scan_book_folder",
    "segment_page",
    "segment_text",
]
