"""Service configuration from environment variables (VISITPREP_* prefix)."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from visitprep.ingest.segmenter import BoundaryPreference


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "") == "1"


@dataclass
class ServiceConfig:
    data_dir: Path = field(default_factory=lambda: Path("./data"))
    stub_mode: bool = True
    admin_token: str | None = None

    # generation / embedding providers
    llm_endpoint: str = ""
    llm_model: str = "gpt-4o-mini"
    embed_endpoint: str = ""
    embed_model: str = "text-embedding-3-small"
    provider_key: str | None = None
    stub_dimension: int = 256
    fixture_dir: Path | None = None
    llm_max_concurrent: int = 8

    # retrieval / interview knobs
    threshold: float = 0.60
    panel_k: int = 6
    classify_k: int = 4
    min_elicit_turns: int = 2

    # segmentation
    max_chars: int = 1200
    overlap_chars: int = 200
    boundary_preference: BoundaryPreference = BoundaryPreference.SENTENCE_END

    # server
    host: str = "127.0.0.1"
    port: int = 8000
    frontend_dir: Path | None = None

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        env = os.environ
        stub = _env_flag("STUB_MODE") or _env_flag("VISITPREP_STUB_MODE")
        if not env.get("VISITPREP_LLM_ENDPOINT") and not env.get("VISITPREP_EMBED_ENDPOINT"):
            stub = True  # no provider configured: offline by default
        boundary = env.get("VISITPREP_BOUNDARY", "SentenceEnd")
        frontend = env.get("VISITPREP_FRONTEND_DIR")
        fixture = env.get("VISITPREP_FIXTURE_DIR")
        return cls(
            data_dir=Path(env.get("VISITPREP_DATA_DIR", "./data")),
            stub_mode=stub,
            admin_token=env.get("VISITPREP_ADMIN_TOKEN") or None,
            llm_endpoint=env.get("VISITPREP_LLM_ENDPOINT", ""),
            llm_model=env.get("VISITPREP_LLM_MODEL", "gpt-4o-mini"),
            embed_endpoint=env.get("VISITPREP_EMBED_ENDPOINT", ""),
            embed_model=env.get("VISITPREP_EMBED_MODEL", "text-embedding-3-small"),
            provider_key=env.get("VISITPREP_PROVIDER_KEY") or None,
            stub_dimension=int(env.get("VISITPREP_STUB_DIMENSION", "256")),
            fixture_dir=Path(fixture) if fixture else None,
            llm_max_concurrent=int(env.get("VISITPREP_LLM_MAX_CONCURRENT", "8")),
            threshold=float(env.get("VISITPREP_THRESHOLD", "0.60")),
            panel_k=int(env.get("VISITPREP_PANEL_K", "6")),
            classify_k=int(env.get("VISITPREP_CLASSIFY_K", "4")),
            min_elicit_turns=int(env.get("VISITPREP_MIN_ELICIT_TURNS", "2")),
            max_chars=int(env.get("VISITPREP_MAX_CHARS", "1200")),
            overlap_chars=int(env.get("VISITPREP_OVERLAP_CHARS", "200")),
            boundary_preference=BoundaryPreference(boundary),
            host=env.get("VISITPREP_HOST", "127.0.0.1"),
            port=int(env.get("VISITPREP_PORT", "8000")),
            frontend_dir=Path(frontend) if frontend else None,
        )

    @property
    def index_dir(self) -> Path:
        return self.data_dir / "index"
