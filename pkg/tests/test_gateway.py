"""Gateway: structured parsing, repair retries, stub fixture matching."""

import json
import threading

import pytest

from visitprep.errors import SchemaViolation, StubFixtureMissing, TemplateBindingError
from visitprep.gateway import (
    Gateway,
    GenerationRequest,
    OutputField,
    PromptTemplate,
    StubGenerationProvider,
    generate_structured,
)

ECHO = PromptTemplate(
    template_id="echo",
    system_text="system",
    user_text="Say {thing} as JSON.",
    output_schema=(
        OutputField("message", "string"),
        OutputField("tags", "string_list", required=False),
    ),
)


def make_provider(output) -> StubGenerationProvider:
    provider = StubGenerationProvider()
    provider.register_fixture("echo", None, output)
    return provider


class TestTemplates:
    def test_render_binds_placeholders(self):
        system, user = ECHO.render({"thing": "hello"})
        assert system == "system"
        assert user == "Say hello as JSON."

    def test_missing_binding_rejected(self):
        with pytest.raises(TemplateBindingError):
            ECHO.render({})

    def test_duplicate_schema_fields_rejected(self):
        with pytest.raises(TemplateBindingError):
            PromptTemplate(
                template_id="dup",
                system_text="",
                user_text="",
                output_schema=(OutputField("a", "string"), OutputField("a", "string")),
            )


class TestGenerateStructured:
    def test_happy_path(self):
        provider = make_provider({"message": "hi", "tags": ["a"]})
        result = generate_structured(ECHO, {"thing": "x"}, provider)
        assert result.fields == {"message": "hi", "tags": ["a"]}
        assert result.attempt_count == 1
        assert result.provider_tag == provider.provider_tag

    def test_missing_required_field_retries_then_fails(self):
        provider = make_provider({"tags": ["a"]})
        calls = []
        original = provider.generate

        def counting(request):
            calls.append(request.user_text)
            return original(request)

        provider.generate = counting
        with pytest.raises(SchemaViolation):
            generate_structured(ECHO, {"thing": "x"}, provider)
        assert len(calls) == 3
        assert "could not be used" in calls[1]  # repair instruction appended

    def test_type_mismatch_detected(self):
        provider = make_provider({"message": 42})
        with pytest.raises(SchemaViolation):
            generate_structured(ECHO, {"thing": "x"}, provider)

    def test_json_inside_prose_extracted(self):
        provider = make_provider('Sure! Here you go: {"message": "hi"} Enjoy.')
        result = generate_structured(ECHO, {"thing": "x"}, provider)
        assert result.fields["message"] == "hi"

    def test_optional_field_absent_ok(self):
        provider = make_provider({"message": "hi"})
        result = generate_structured(ECHO, {"thing": "x"}, provider)
        assert "tags" not in result.fields

    def test_deterministic_for_same_inputs(self):
        provider = make_provider({"message": "hi"})
        first = generate_structured(ECHO, {"thing": "x"}, provider)
        second = generate_structured(ECHO, {"thing": "x"}, provider)
        assert first.fields == second.fields
        assert first.raw_text == second.raw_text


class TestStubProvider:
    def test_pattern_matching_prefers_specific(self):
        provider = StubGenerationProvider()
        provider.register_fixture("echo", None, {"message": "generic"})
        provider.register_fixture("echo", {"thing": "special"}, {"message": "special"})
        generic = generate_structured(ECHO, {"thing": "plain"}, provider)
        special = generate_structured(ECHO, {"thing": "special case"}, provider)
        assert generic.fields["message"] == "generic"
        assert special.fields["message"] == "special"

    def test_missing_fixture_raises(self):
        provider = StubGenerationProvider()
        request = GenerationRequest("nope", "s", "u", {})
        with pytest.raises(StubFixtureMissing):
            provider.generate(request)

    def test_synthesizer_fallback(self):
        provider = StubGenerationProvider()
        provider.register_synthesizer("echo", lambda b: {"message": b["thing"].upper()})
        result = generate_structured(ECHO, {"thing": "soft"}, provider)
        assert result.fields["message"] == "SOFT"

    def test_fixture_dir_loading(self, tmp_path):
        (tmp_path / "one.json").write_text(
            json.dumps({"echo": {"message": "from file"}}), encoding="utf-8"
        )
        (tmp_path / "two.json").write_text(
            json.dumps(
                [{"template_id": "echo", "pattern": {"thing": "zz"}, "output": {"message": "patterned"}}]
            ),
            encoding="utf-8",
        )
        provider = StubGenerationProvider()
        assert provider.load_fixture_dir(tmp_path) == 2
        assert generate_structured(ECHO, {"thing": "aa"}, provider).fields["message"] == "from file"
        assert generate_structured(ECHO, {"thing": "zz!"}, provider).fields["message"] == "patterned"


class TestGatewayConcurrency:
    def test_concurrent_calls_bounded(self):
        active = []
        peak = []
        lock = threading.Lock()

        class SlowProvider:
            provider_tag = "slow"

            def generate(self, request):
                with lock:
                    active.append(1)
                    peak.append(len(active))
                import time

                time.sleep(0.01)
                with lock:
                    active.pop()
                return json.dumps({"message": "ok"})

        gateway = Gateway(SlowProvider(), max_concurrent=2)
        threads = [
            threading.Thread(target=lambda: gateway.generate_structured(ECHO, {"thing": "x"}))
            for _ in range(8)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert max(peak) <= 2
