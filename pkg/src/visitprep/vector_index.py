"""Flat exact-scan vector index with checksummed on-disk persistence.

Guidebook corpora are small (hundreds of segments), so retrieval is an exact
cosine scan: no approximate structures, which keeps the brute-force oracle
equivalence testable. Persistence is three files per index:

  manifest.json   index metadata + sha256 checksum of the vector file
  vectors.bin     little-endian header ``<II`` (dimension, count), then
                  count*dimension float32 values, row-major
  segments.jsonl  one segment per line, in row order
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from visitprep.embeddings import EmbeddingProvider, embed_texts
from visitprep.errors import (
    CorruptIndexFile,
    DimensionMismatch,
    EmptyIndex,
    EmptyInput,
    ProviderTagMismatch,
    ZeroVector,
)
from visitprep.ingest.segmenter import Segment

MANIFEST_FILE = "manifest.json"
VECTORS_FILE = "vectors.bin"
SEGMENTS_FILE = "segments.jsonl"


def cosine_similarity(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class IndexManifest:
    index_id: str
    book_ids: tuple[str, ...]
    dimension: int
    segment_count: int
    provider_tag: str
    created_at: str
    vectors_sha256: str = ""

    def to_dict(self) -> dict:
        return {
            "index_id": self.index_id,
            "book_ids": list(self.book_ids),
            "dimension": self.dimension,
            "segment_count": self.segment_count,
            "provider_tag": self.provider_tag,
            "created_at": self.created_at,
            "vectors_sha256": self.vectors_sha256,
        }


@dataclass(frozen=True)
class RetrievalHit:
    segment_id: str
    score: float
    rank: int


@dataclass
class VectorIndex:
    manifest: IndexManifest
    vectors: np.ndarray  # float32, shape (segment_count, dimension)
    segments: list[Segment]
    _by_id: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._by_id:
            self._by_id = {seg.segment_id: row for row, seg in enumerate(self.segments)}

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    def segment(self, segment_id: str) -> Segment:
        return self.segments[self._by_id[segment_id]]

    def has_segment(self, segment_id: str) -> bool:
        return segment_id in self._by_id

    def vector_for(self, segment_id: str) -> np.ndarray:
        return self.vectors[self._by_id[segment_id]]


def build_index(
    segments: Sequence[Segment],
    vectors: Sequence[np.ndarray],
    provider_tag: str,
    created_at: str = "1970-01-01T00:00:00+00:00",
) -> VectorIndex:
    """Assemble an in-memory index; vectors are stored as float32 rows.

    ``created_at`` is treated as an input so rebuilding from identical inputs
    persists byte-identical files; callers wanting a wall-clock stamp pass one.
    """
    if not segments:
        raise EmptyInput("cannot build an index from zero segments")
    if len(segments) != len(vectors):
        raise DimensionMismatch(
            f"{len(segments)} segments but {len(vectors)} vectors"
        )
    dimension = int(np.asarray(vectors[0]).shape[0])
    matrix = np.empty((len(vectors), dimension), dtype=np.float32)
    for row, vec in enumerate(vectors):
        arr = np.asarray(vec)
        if arr.ndim != 1 or int(arr.shape[0]) != dimension:
            raise DimensionMismatch(
                f"vector {row} has dimension {arr.shape}, expected ({dimension},)"
            )
        matrix[row] = arr.astype(np.float32)
        if not matrix[row].any():
            raise ZeroVector(f"vector {row} is zero after float32 storage")

    book_ids = tuple(sorted({seg.book_id for seg in segments}))
    content_key = hashlib.sha256()
    for seg in segments:
        content_key.update(seg.segment_id.encode("utf-8"))
    content_key.update(matrix.tobytes())
    content_key.update(provider_tag.encode("utf-8"))
    manifest = IndexManifest(
        index_id=content_key.hexdigest()[:16],
        book_ids=book_ids,
        dimension=dimension,
        segment_count=len(segments),
        provider_tag=provider_tag,
        created_at=created_at,
        vectors_sha256=hashlib.sha256(_vector_file_bytes(matrix)).hexdigest(),
    )
    return VectorIndex(manifest=manifest, vectors=matrix, segments=list(segments))


def _vector_file_bytes(matrix: np.ndarray) -> bytes:
    count, dimension = matrix.shape
    header = struct.pack("<II", dimension, count)
    return header + matrix.astype("<f4").tobytes(order="C")


def save_index(index: VectorIndex, path: str | Path) -> None:
    target = Path(path)
    target.mkdir(parents=True, exist_ok=True)
    vector_bytes = _vector_file_bytes(index.vectors)
    (target / VECTORS_FILE).write_bytes(vector_bytes)
    with (target / SEGMENTS_FILE).open("w", encoding="utf-8") as fh:
        for seg in index.segments:
            fh.write(json.dumps(seg.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    manifest = index.manifest
    actual_sha = hashlib.sha256(vector_bytes).hexdigest()
    if manifest.vectors_sha256 != actual_sha:
        manifest = dataclasses.replace(manifest, vectors_sha256=actual_sha)
    (target / MANIFEST_FILE).write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_index(path: str | Path) -> VectorIndex:
    source = Path(path)
    try:
        manifest_data = json.loads((source / MANIFEST_FILE).read_text(encoding="utf-8"))
        vector_bytes = (source / VECTORS_FILE).read_bytes()
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptIndexFile(f"cannot read index at {source}: {exc}") from exc

    checksum = hashlib.sha256(vector_bytes).hexdigest()
    if checksum != manifest_data.get("vectors_sha256"):
        raise CorruptIndexFile(
            f"vector file checksum mismatch at {source}",
            details={"expected": manifest_data.get("vectors_sha256"), "actual": checksum},
        )
    if len(vector_bytes) < 8:
        raise CorruptIndexFile("vector file too short for header")
    dimension, count = struct.unpack("<II", vector_bytes[:8])
    expected = 8 + 4 * dimension * count
    if len(vector_bytes) != expected:
        raise CorruptIndexFile(
            f"vector file length {len(vector_bytes)} != expected {expected}"
        )
    matrix = np.frombuffer(vector_bytes[8:], dtype="<f4").reshape(count, dimension).copy()

    segments = []
    with (source / SEGMENTS_FILE).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                segments.append(Segment.from_dict(json.loads(line)))
    if len(segments) != count:
        raise CorruptIndexFile(
            f"segment metadata count {len(segments)} != vector count {count}"
        )
    manifest = IndexManifest(
        index_id=manifest_data["index_id"],
        book_ids=tuple(manifest_data["book_ids"]),
        dimension=dimension,
        segment_count=count,
        provider_tag=manifest_data["provider_tag"],
        created_at=manifest_data["created_at"],
        vectors_sha256=manifest_data["vectors_sha256"],
    )
    return VectorIndex(manifest=manifest, vectors=matrix, segments=segments)


def retrieve(
    query_text: str,
    k: int,
    index: VectorIndex,
    provider: EmbeddingProvider,
) -> list[RetrievalHit]:
    """Exact top-k cosine retrieval; ties broken by segment_id ascending."""
    if k < 1:
        raise EmptyInput(f"k must be >= 1, got {k}")
    if index.segment_count == 0:
        raise EmptyIndex("index holds no segments")
    if provider.provider_tag != index.manifest.provider_tag:
        raise ProviderTagMismatch(
            f"index built with provider {index.manifest.provider_tag!r}, "
            f"queried with {provider.provider_tag!r}"
        )
    query = embed_texts([query_text], provider, expected_dimension=index.manifest.dimension)[0]
    query = np.asarray(query, dtype=np.float64)
    query_norm = float(np.linalg.norm(query))
    if query_norm == 0.0 or not math.isfinite(query_norm):
        raise ZeroVector("query embedded to a zero or non-finite vector")

    matrix = index.vectors.astype(np.float64)
    # Row-by-row so bitwise-identical vectors get bitwise-identical scores
    # (batched matvec may round differently per row position, breaking ties).
    scores = []
    for row in range(index.segment_count):
        stored = matrix[row]
        norm = float(np.linalg.norm(stored))
        if norm == 0.0:
            scores.append(float("-inf"))  # zero stored vectors never match
        else:
            scores.append(float(np.dot(stored, query)) / (norm * query_norm))

    order = sorted(range(index.segment_count), key=lambda row: (-scores[row], index.segments[row].segment_id))
    top = order[: min(k, index.segment_count)]
    return [
        RetrievalHit(segment_id=index.segments[row].segment_id, score=float(scores[row]), rank=rank)
        for rank, row in enumerate(top, start=1)
    ]
