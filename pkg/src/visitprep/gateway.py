"""Provider-neutral text generation with schema-validated structured output.

Downstream modules never touch raw provider text: they declare an output
schema on the prompt template and consume parsed fields. Malformed outputs
trigger a repair re-prompt, at most twice, then ``SchemaViolation``.

The stub provider serves canned fixtures (matched on template id plus an
optional bindings pattern) or runs a registered synthesizer: a deterministic
function of the bindings. With fixtures/synthesizers in place the whole
pipeline runs with zero network access.
"""

from __future__ import annotations

import json
import logging
import os
import re
import string
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Protocol

from visitprep.errors import (
    ProviderTimeout,
    ProviderUnavailable,
    SchemaViolation,
    StubFixtureMissing,
    TemplateBindingError,
)

logger = logging.getLogger(__name__)

FIELD_TYPES = ("string", "string_list", "table")


@dataclass(frozen=True)
class OutputField:
    name: str
    type: str  # one of FIELD_TYPES
    required: bool = True


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    system_text: str
    user_text: str
    output_schema: tuple[OutputField, ...]

    def __post_init__(self):
        names = [f.name for f in self.output_schema]
        if len(names) != len(set(names)):
            raise TemplateBindingError(f"duplicate schema fields in {self.template_id}")
        for f in self.output_schema:
            if f.type not in FIELD_TYPES:
                raise TemplateBindingError(f"unknown field type {f.type!r} in {self.template_id}")

    def placeholders(self) -> set[str]:
        names = set()
        for _, name, _, _ in string.Formatter().parse(self.user_text):
            if name:
                names.add(name)
        return names

    def render(self, bindings: Mapping[str, str]) -> tuple[str, str]:
        missing = self.placeholders() - set(bindings)
        if missing:
            raise TemplateBindingError(
                f"unbound placeholders for {self.template_id}: {sorted(missing)}"
            )
        return self.system_text, self.user_text.format(**bindings)


@dataclass(frozen=True)
class GenerationRequest:
    template_id: str
    system_text: str
    user_text: str
    bindings: Mapping[str, str]


@dataclass
class GenerationResult:
    fields: dict
    raw_text: str
    provider_tag: str
    attempt_count: int


class GenerationProvider(Protocol):
    provider_tag: str

    def generate(self, request: GenerationRequest) -> str: ...


Synthesizer = Callable[[Mapping[str, str]], dict]


@dataclass
class _StubFixture:
    template_id: str
    pattern: dict[str, str] | None
    output: dict | str


class StubGenerationProvider:
    """Deterministic offline generation: fixtures first, then synthesizers."""

    provider_tag = "stub-generation-v1"

    def __init__(self):
        self._fixtures: list[_StubFixture] = []
        self._synthesizers: dict[str, Synthesizer] = {}

    def register_fixture(
        self,
        template_id: str,
        pattern: dict[str, str] | None = None,
        output: dict | str | None = None,
    ) -> None:
        """Serve ``output`` for ``template_id`` when every pattern value appears
        as a substring of the corresponding binding."""
        self._fixtures.append(_StubFixture(template_id, pattern, output if output is not None else {}))

    def register_synthesizer(self, template_id: str, synthesizer: Synthesizer) -> None:
        self._synthesizers[template_id] = synthesizer

    def _match(self, request: GenerationRequest) -> _StubFixture | None:
        best: _StubFixture | None = None
        best_specificity = -1
        for fixture in self._fixtures:
            if fixture.template_id != request.template_id:
                continue
            pattern = fixture.pattern or {}
            if all(needle in request.bindings.get(key, "") for key, needle in pattern.items()):
                # Most specific pattern wins; later registrations break ties.
                if len(pattern) >= best_specificity:
                    best = fixture
                    best_specificity = len(pattern)
        return best

    def generate(self, request: GenerationRequest) -> str:
        fixture = self._match(request)
        if fixture is not None:
            if isinstance(fixture.output, str):
                return fixture.output
            return json.dumps(fixture.output, ensure_ascii=False)
        synthesizer = self._synthesizers.get(request.template_id)
        if synthesizer is not None:
            return json.dumps(synthesizer(request.bindings), ensure_ascii=False)
        raise StubFixtureMissing(
            f"no stub fixture or synthesizer for template {request.template_id!r}"
        )

    def load_fixture_dir(self, path: str | Path) -> int:
        """Load fixtures from a directory of JSON files.

        Each file holds either ``{template_id: output, ...}`` or a list of
        ``{"template_id": ..., "pattern": {...}, "output": ...}`` entries.
        Returns the number of fixtures loaded.
        """
        count = 0
        for file in sorted(Path(path).glob("*.json")):
            data = json.loads(file.read_text(encoding="utf-8"))
            if isinstance(data, list):
                for entry in data:
                    self.register_fixture(entry["template_id"], entry.get("pattern"), entry["output"])
                    count += 1
            else:
                for template_id, output in data.items():
                    self.register_fixture(template_id, None, output)
                    count += 1
        return count


class HttpGenerationProvider:
    """OpenAI-compatible chat-completions client; model replies with one JSON object."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        temperature: float = 0.2,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.temperature = temperature
        self.provider_tag = f"http-{model}"

    def generate(self, request: GenerationRequest) -> str:
        import httpx

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = httpx.post(
                f"{self.endpoint}/chat/completions",
                json={
                    "model": self.model,
                    "temperature": self.temperature,
                    "messages": [
                        {"role": "system", "content": request.system_text},
                        {"role": "user", "content": request.user_text},
                    ],
                },
                headers=headers,
                timeout=self.timeout,
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(f"generation request timed out: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"generation request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderUnavailable(
                f"generation provider returned {response.status_code}: {response.text[:200]}"
            )
        payload = response.json()
        return payload["choices"][0]["message"]["content"]


def provider_from_env() -> GenerationProvider:
    stub = os.environ.get("STUB_MODE", "") == "1" or os.environ.get("VISITPREP_STUB_MODE", "") == "1"
    endpoint = os.environ.get("VISITPREP_LLM_ENDPOINT", "")
    if stub or not endpoint:
        from visitprep.prompts import build_stub_generation_provider

        provider = build_stub_generation_provider()
        fixture_dir = os.environ.get("VISITPREP_FIXTURE_DIR")
        if fixture_dir and Path(fixture_dir).is_dir():
            provider.load_fixture_dir(fixture_dir)
        return provider
    return HttpGenerationProvider(
        endpoint=endpoint,
        model=os.environ.get("VISITPREP_LLM_MODEL", "gpt-4o-mini"),
        api_key=os.environ.get("VISITPREP_PROVIDER_KEY"),
    )


_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)

_REPAIR_INSTRUCTION = (
    "\n\nYour previous reply could not be used: {error}. "
    "Respond again with exactly one JSON object containing the fields: {fields}. "
    "No prose outside the JSON object."
)


def _parse_structured(raw: str, schema: tuple[OutputField, ...]) -> dict:
    match = _JSON_BLOCK_RE.search(raw)
    if match is None:
        raise ValueError("no JSON object found in reply")
    try:
        data = json.loads(match.group(0))
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError("top-level JSON value is not an object")

    parsed: dict = {}
    for fld in schema:
        if fld.name not in data or data[fld.name] is None:
            if fld.required:
                raise ValueError(f"missing required field {fld.name!r}")
            continue
        value = data[fld.name]
        if fld.type == "string":
            if not isinstance(value, str):
                raise ValueError(f"field {fld.name!r} must be a string")
        elif fld.type == "string_list":
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ValueError(f"field {fld.name!r} must be a list of strings")
        elif fld.type == "table":
            if not isinstance(value, list) or not all(isinstance(v, dict) for v in value):
                raise ValueError(f"field {fld.name!r} must be a list of objects")
        parsed[fld.name] = value
    return parsed


def generate_structured(
    template: PromptTemplate,
    bindings: Mapping[str, str],
    provider: GenerationProvider,
    max_attempts: int = 3,
    semaphore: threading.Semaphore | None = None,
) -> GenerationResult:
    """Generate and parse against the template schema, repairing up to twice."""
    system_text, user_text = template.render(bindings)
    request_user = user_text
    last_error = ""
    for attempt in range(1, max_attempts + 1):
        request = GenerationRequest(
            template_id=template.template_id,
            system_text=system_text,
            user_text=request_user,
            bindings=bindings,
        )
        if semaphore is not None:
            semaphore.acquire()
        try:
            raw = provider.generate(request)
        finally:
            if semaphore is not None:
                semaphore.release()
        try:
            fields = _parse_structured(raw, template.output_schema)
        except ValueError as exc:
            last_error = str(exc)
            logger.warning(
                "structured parse failed for %s (attempt %d/%d): %s",
                template.template_id, attempt, max_attempts, last_error,
            )
            request_user = user_text + _REPAIR_INSTRUCTION.format(
                error=last_error,
                fields=", ".join(f.name for f in template.output_schema),
            )
            continue
        return GenerationResult(
            fields=fields,
            raw_text=raw,
            provider_tag=provider.provider_tag,
            attempt_count=attempt,
        )
    raise SchemaViolation(
        f"output for {template.template_id} failed schema after {max_attempts} attempts: {last_error}",
        details={"template_id": template.template_id, "attempts": max_attempts},
    )


class Gateway:
    """Shared entry point: one provider, one concurrency cap, bounded retries."""

    def __init__(self, provider: GenerationProvider, max_concurrent: int = 8):
        self.provider = provider
        self._semaphore = threading.BoundedSemaphore(max_concurrent)

    def generate_structured(
        self, template: PromptTemplate, bindings: Mapping[str, str], max_attempts: int = 3
    ) -> GenerationResult:
        return generate_structured(
            template, bindings, self.provider, max_attempts=max_attempts, semaphore=self._semaphore
        )
