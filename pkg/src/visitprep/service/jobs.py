"""Background ingestion jobs with monotone progress and atomic index swap.

A job walks Pending -> Extracting -> Segmenting -> Embedding -> Indexing ->
Done (Failed is reachable from any active state). Progress within [0, 1]
never decreases: updates clamp against the last value. On completion the
book's segments replace any previous version of the same book and the merged
index is written to a temp directory, then swapped in atomically.
"""

from __future__ import annotations

import logging
import shutil
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from visitprep.embeddings import EmbeddingProvider, embed_texts
from visitprep.errors import VisitPrepError
from visitprep.ingest import IngestReport, SegmentationConfig, scan_book_folder, segment_text
from visitprep.vector_index import VectorIndex, build_index, load_index, save_index

logger = logging.getLogger(__name__)

EMBED_BATCH_SIZE = 16

# Progress ranges per phase.
_PHASE_SPANS = {
    "Extracting": (0.0, 0.30),
    "Segmenting": (0.30, 0.40),
    "Embedding": (0.40, 0.90),
    "Indexing": (0.90, 1.0),
}


class IngestStatus(str, Enum):
    PENDING = "Pending"
    EXTRACTING = "Extracting"
    SEGMENTING = "Segmenting"
    EMBEDDING = "Embedding"
    INDEXING = "Indexing"
    DONE = "Done"
    FAILED = "Failed"


@dataclass
class IngestJob:
    job_id: str
    book_id: str
    status: IngestStatus = IngestStatus.PENDING
    progress: float = 0.0
    report: IngestReport | None = None
    error: str | None = None
    created_at: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "job_id": self.job_id,
                "book_id": self.book_id,
                "status": self.status.value,
                "progress": self.progress,
                "report": self.report.to_dict() if self.report else None,
                "error": self.error,
                "created_at": self.created_at,
            }

    def update(self, status: IngestStatus | None = None, progress: float | None = None) -> None:
        with self._lock:
            if status is not None:
                self.status = status
            if progress is not None:
                # monotone by construction
                self.progress = max(self.progress, min(1.0, progress))

    def phase_progress(self, phase: str, fraction: float) -> None:
        low, high = _PHASE_SPANS[phase]
        self.update(progress=low + (high - low) * max(0.0, min(1.0, fraction)))


class IndexHolder:
    """The live index reference; swapped atomically when an ingest finishes."""

    def __init__(self, index_dir: Path):
        self.index_dir = index_dir
        self._lock = threading.Lock()
        self._index: VectorIndex | None = None
        if (index_dir / "manifest.json").exists():
            try:
                self._index = load_index(index_dir)
                logger.info(
                    "loaded index with %d segments", self._index.segment_count
                )
            except VisitPrepError as exc:
                logger.error("existing index unreadable, starting empty: %s", exc)

    def get(self) -> VectorIndex | None:
        with self._lock:
            return self._index

    def swap(self, index: VectorIndex, persisted_dir: Path) -> None:
        with self._lock:
            if self.index_dir.exists():
                shutil.rmtree(self.index_dir)
            persisted_dir.rename(self.index_dir)
            self._index = index


class IngestManager:
    """Runs ingest jobs on a small worker pool (max 2 concurrent)."""

    def __init__(
        self,
        holder: IndexHolder,
        embed_provider: EmbeddingProvider,
        segmentation: SegmentationConfig,
        work_dir: Path,
        max_workers: int = 2,
    ):
        self.holder = holder
        self.embed_provider = embed_provider
        self.segmentation = segmentation
        self.work_dir = work_dir
        self.work_dir.mkdir(parents=True, exist_ok=True)
        self._executor = ThreadPoolExecutor(max_workers=max_workers)
        self._jobs: dict[str, IngestJob] = {}
        self._jobs_lock = threading.Lock()
        self._swap_lock = threading.Lock()

    def submit(self, book_path: Path, book_id: str | None = None) -> IngestJob:
        job = IngestJob(job_id=uuid.uuid4().hex, book_id=book_id or book_path.name)
        with self._jobs_lock:
            self._jobs[job.job_id] = job
        self._executor.submit(self._run, job, book_path)
        return job

    def get(self, job_id: str) -> IngestJob | None:
        with self._jobs_lock:
            return self._jobs.get(job_id)

    def shutdown(self) -> None:
        self._executor.shutdown(wait=True)

    def _run(self, job: IngestJob, book_path: Path) -> None:
        try:
            self._ingest(job, book_path)
        except VisitPrepError as exc:
            logger.error("ingest job %s failed: %s", job.job_id, exc.message)
            with job._lock:
                job.status = IngestStatus.FAILED
                job.error = f"{exc.code}: {exc.message}"
        except Exception as exc:  # defensive: job must always terminate
            logger.exception("ingest job %s crashed", job.job_id)
            with job._lock:
                job.status = IngestStatus.FAILED
                job.error = f"InternalError: {exc}"

    def _ingest(self, job: IngestJob, book_path: Path) -> None:
        job.update(status=IngestStatus.EXTRACTING, progress=0.0)
        scan = scan_book_folder(
            book_path,
            book_id=job.book_id,
            on_page=lambda done, total: job.phase_progress("Extracting", done / total),
        )

        job.update(status=IngestStatus.SEGMENTING)
        segments = segment_text(scan.pages, self.segmentation)
        job.phase_progress("Segmenting", 1.0)

        job.update(status=IngestStatus.EMBEDDING)
        vectors = []
        texts = [seg.text for seg in segments]
        for start in range(0, len(texts), EMBED_BATCH_SIZE):
            batch = texts[start:start + EMBED_BATCH_SIZE]
            vectors.extend(embed_texts(batch, self.embed_provider))
            job.phase_progress("Embedding", (start + len(batch)) / max(1, len(texts)))
        job.phase_progress("Embedding", 1.0)

        job.update(status=IngestStatus.INDEXING)
        # Serialize merge+swap so concurrent jobs cannot drop each other's books.
        with self._swap_lock:
            all_segments = list(segments)
            all_vectors = list(vectors)
            current = self.holder.get()
            if current is not None:
                for row, seg in enumerate(current.segments):
                    if seg.book_id != job.book_id:
                        all_segments.append(seg)
                        all_vectors.append(current.vectors[row])
            index = build_index(
                all_segments,
                all_vectors,
                provider_tag=self.embed_provider.provider_tag,
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            staging = self.work_dir / f"index-{job.job_id}"
            save_index(index, staging)
            job.phase_progress("Indexing", 0.9)
            self.holder.swap(index, staging)

        report = IngestReport(
            book_id=job.book_id,
            page_count=len(scan.pages),
            segment_count=len(segments),
            failed_pages=[
                {"filename": f.filename, "page_number": f.page_number, "reason": f.reason}
                for f in scan.failed_pages
            ],
            skipped_files=list(scan.skipped_files),
        )
        with job._lock:
            job.report = report
        job.update(status=IngestStatus.DONE, progress=1.0)
