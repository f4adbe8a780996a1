from pathlib import Path

import pytest

from visitprep.embeddings import StubEmbeddingProvider, embed_texts
from visitprep.gateway import Gateway
from visitprep.ingest import SegmentationConfig, scan_book_folder, segment_text
from visitprep.interview import EngineConfig, InterviewEngine
from visitprep.prompts import build_stub_generation_provider
from visitprep.vector_index import VectorIndex, build_index

SAMPLE_BOOK_DIR = Path(__file__).resolve().parents[1] / "sample_data" / "book"


@pytest.fixture(scope="session")
def sample_book_dir() -> Path:
    return SAMPLE_BOOK_DIR


@pytest.fixture(scope="session")
def stub_embed() -> StubEmbeddingProvider:
    return StubEmbeddingProvider()


@pytest.fixture(scope="session")
def sample_index(stub_embed) -> VectorIndex:
    scan = scan_book_folder(SAMPLE_BOOK_DIR, book_id="sample-guide")
    segments = segment_text(scan.pages, SegmentationConfig(max_chars=400, overlap_chars=80))
    vectors = embed_texts([s.text for s in segments], stub_embed)
    return build_index(segments, vectors, stub_embed.provider_tag)


@pytest.fixture
def gateway() -> Gateway:
    return Gateway(build_stub_generation_provider())


@pytest.fixture
def engine(sample_index, stub_embed, gateway) -> InterviewEngine:
    return InterviewEngine(
        index_source=lambda: sample_index,
        embed_provider=stub_embed,
        gateway=gateway,
        config=EngineConfig(),
    )
