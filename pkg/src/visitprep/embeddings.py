"""Embedding providers and the retrying embed wrapper.

The stub provider is fully deterministic and offline: each word token maps to
a hash-seeded pseudo-random vector, and a text embeds as the normalized sum
of its token vectors. Identical texts embed identically, texts sharing most
tokens land close together, and token-disjoint texts are near-orthogonal,
which is what the retrieval and answerability tests lean on.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from typing import Protocol, Sequence

import numpy as np

from visitprep.errors import DimensionMismatch, ProviderTimeout, ProviderUnavailable

logger = logging.getLogger(__name__)

STUB_DIMENSION = 256


class EmbeddingProvider(Protocol):
    provider_tag: str
    dimension: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class StubEmbeddingProvider:
    """Deterministic hash-seeded unit-vector embeddings; no network."""

    def __init__(self, dimension: int = STUB_DIMENSION):
        self.dimension = dimension
        self.provider_tag = f"stub-hash-d{dimension}-v1"
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is not None:
            return cached
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        seed = np.frombuffer(digest[:16], dtype="<u4").astype(np.uint32)
        vec = np.random.RandomState(seed).standard_normal(self.dimension)
        self._token_cache[token] = vec
        return vec

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        vectors = []
        for text in texts:
            tokens = text.lower().split() or [text]
            acc = np.zeros(self.dimension, dtype=np.float64)
            for token in tokens:
                acc += self._token_vector(token)
            norm = float(np.linalg.norm(acc))
            if norm == 0.0:
                acc = self._token_vector(text or "\x00empty")
                norm = float(np.linalg.norm(acc))
            vectors.append(acc / norm)
        return vectors


class HttpEmbeddingProvider:
    """OpenAI-compatible ``/embeddings`` endpoint client."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        dimension: int | None = None,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.dimension = dimension or 0  # discovered on first call if unset
        self.timeout = timeout
        self.provider_tag = f"http-{model}"

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(
                f"{self.endpoint}/embeddings",
                json={"model": self.model, "input": list(texts)},
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"embedding request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"embedding request failed: {exc}") from exc
        if response.status_code >= 500:
            raise ProviderUnavailable(f"embedding provider returned {response.status_code}")
        if response.status_code != 200:
            raise ProviderUnavailable(
                f"embedding provider rejected request ({response.status_code}): {response.text[:200]}"
            )
        payload = response.json()
        rows = sorted(payload["data"], key=lambda item: item["index"])
        vectors = [np.asarray(row["embedding"], dtype=np.float64) for row in rows]
        if vectors and not self.dimension:
            self.dimension = int(vectors[0].shape[0])
        return vectors


def provider_from_env() -> EmbeddingProvider:
    """Stub unless a real endpoint is configured and STUB_MODE is off."""
    stub = os.environ.get("STUB_MODE", "") == "1" or os.environ.get("VISITPREP_STUB_MODE", "") == "1"
    endpoint = os.environ.get("VISITPREP_EMBED_ENDPOINT", "")
    if stub or not endpoint:
        dim = int(os.environ.get("VISITPREP_STUB_DIMENSION", str(STUB_DIMENSION)))
        return StubEmbeddingProvider(dimension=dim)
    return HttpEmbeddingProvider(
        endpoint=endpoint,
        model=os.environ.get("VISITPREP_EMBED_MODEL", "text-embedding-3-small"),
        api_key=os.environ.get("VISITPREP_PROVIDER_KEY"),
        dimension=int(os.environ["VISITPREP_EMBED_DIMENSION"])
        if "VISITPREP_EMBED_DIMENSION" in os.environ
        else None,
    )


def embed_texts(
    texts: Sequence[str],
    provider: EmbeddingProvider,
    expected_dimension: int | None = None,
    max_attempts: int = 3,
    backoff_base: float = 0.2,
) -> list[np.ndarray]:
    """Embed texts, retrying transient provider failures with exponential backoff.

    Returns one finite vector per input, order-preserving. Raises
    ``DimensionMismatch`` if the result does not match ``expected_dimension``.
    """
    if not texts:
        return []
    attempt = 0
    while True:
        attempt += 1
        try:
            vectors = provider.embed(texts)
            break
        except ProviderUnavailable as exc:
            if attempt >= max_attempts:
                raise
            delay = backoff_base * (2 ** (attempt - 1))
            logger.warning("embedding attempt %d failed (%s); retrying in %.2fs", attempt, exc, delay)
            time.sleep(delay)

    if len(vectors) != len(texts):
        raise ProviderUnavailable(
            f"provider returned {len(vectors)} vectors for {len(texts)} inputs"
        )
    dimension = expected_dimension
    for i, vec in enumerate(vectors):
        if not np.all(np.isfinite(vec)):
            raise ProviderUnavailable(f"non-finite embedding at position {i}")
        if dimension is None:
            dimension = int(vec.shape[0])
        elif int(vec.shape[0]) != dimension:
            raise DimensionMismatch(
                f"embedding at position {i} has dimension {vec.shape[0]}, expected {dimension}"
            )
    return vectors
