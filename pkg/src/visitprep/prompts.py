"""Prompt templates for the generation steps, plus their stub synthesizers.

Each template declares the structured output its consumer parses. The stub
synthesizers are deterministic functions of the bindings that satisfy the
same contracts the real provider is prompted to satisfy (grounded citations,
first-person narrative, 14-20 candidate questions), so every downstream
module is exercisable offline.

Corpus context is always passed as lines of the form ``[segment_id] text``;
generated citations must only use ids present in that context.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Mapping

from visitprep.gateway import OutputField, PromptTemplate, StubGenerationProvider

NOT_COVERED = "not covered in guidebook"
REQUIRED_DIMENSIONS = ("benefits", "risks", "certainty")

_CONTEXT_LINE_RE = re.compile(r"^\[([0-9a-fA-F]{8,64})\]\s?(.*)$", re.MULTILINE)


def format_context(items: list[tuple[str, str]]) -> str:
    """Render (segment_id, text) pairs as the context block used everywhere.

    One line per item; embedded newlines are flattened so the block stays
    line-parseable.
    """
    return "\n".join(
        f"[{segment_id}] {' '.join(text.split())}" for segment_id, text in items
    )


def parse_context(context: str) -> list[tuple[str, str]]:
    return [(m.group(1), m.group(2)) for m in _CONTEXT_LINE_RE.finditer(context)]


def first_sentence(text: str, max_chars: int = 240) -> str:
    match = re.search(r"[.!?](?:\s|$)", text)
    sentence = text[: match.end()].strip() if match else text.strip()
    if len(sentence) > max_chars:
        sentence = sentence[:max_chars].rsplit(" ", 1)[0].rstrip() + "..."
    return sentence


GAP_QUERIES = PromptTemplate(
    template_id="gap_queries",
    system_text=(
        "You help prepare patients for clinic visits. From an interview you "
        "identify what the patient does not yet know and phrase each gap as a "
        "short search query over an educational guidebook."
    ),
    user_text=(
        "Selected topics:\n{topics}\n\n"
        "Interview transcript:\n{transcript}\n\n"
        "Patient statements:\n{patient_turns}\n\n"
        "List between 1 and 5 short search queries (one per knowledge gap) as JSON: "
        '{{"queries": ["..."]}}'
    ),
    output_schema=(OutputField("queries", "string_list"),),
)


KNOWLEDGE_PANEL = PromptTemplate(
    template_id="knowledge_panel",
    system_text=(
        "You summarize educational guidebook excerpts for a patient facing a "
        "decision. Use ONLY the provided excerpts. Every factual item must cite "
        "the ids of the excerpts it came from. If the excerpts do not cover a "
        f'cell of the option comparison, write exactly "{NOT_COVERED}" with no sources.'
    ),
    user_text=(
        "Selected topics:\n{topics}\n\n"
        "Interview transcript:\n{transcript}\n\n"
        "Guidebook excerpts (cite by id):\n{context}\n\n"
        "Produce JSON with fields: background_summary (string), decision_factors "
        '(list of {{"text": ..., "sources": [ids]}}), options (list of option names), '
        'dimensions (list including "benefits", "risks", "certainty"), cells (list of '
        '{{"option": ..., "dimension": ..., "text": ..., "sources": [ids]}} covering every '
        "option x dimension pair).{reminder}"
    ),
    output_schema=(
        OutputField("background_summary", "string"),
        OutputField("decision_factors", "table"),
        OutputField("options", "string_list"),
        OutputField("dimensions", "string_list"),
        OutputField("cells", "table"),
    ),
)


JOURNEY_NARRATIVE = PromptTemplate(
    template_id="journey_narrative",
    system_text=(
        "You rewrite a patient interview as a short first-person story the "
        "patient could read aloud. Write strictly in the first person (I, my); "
        "never address the patient as 'you'. Name each selected topic."
    ),
    user_text=(
        "Selected topics:\n{topics}\n\n"
        "What the patient shared about their knowledge:\n{elicit_answers}\n\n"
        "What the patient said matters to them:\n{reflection_answers}\n\n"
        "Full transcript for tone:\n{transcript}\n\n"
        'Reply as JSON: {{"narrative": "..."}}{reminder}'
    ),
    output_schema=(OutputField("narrative", "string"),),
)


VISIT_CANDIDATES = PromptTemplate(
    template_id="visit_candidates",
    system_text=(
        "You draft candidate visit-preparation questions for a patient: some "
        "checkable against their guidebook, some personal questions only their "
        "clinician can answer. Draft 14 to 20 distinct questions."
    ),
    user_text=(
        "Patient narrative:\n{narrative}\n\n"
        "Knowledge panel background:\n{panel_background}\n\n"
        "Decision factors:\n{panel_factors}\n\n"
        "Option comparison notes:\n{panel_cells}\n\n"
        "Batch number: {batch}\n\n"
        'Reply as JSON: {{"questions": ["..."]}}'
    ),
    output_schema=(OutputField("questions", "string_list"),),
)


KNOW_THEM_ANSWER = PromptTemplate(
    template_id="know_them_answer",
    system_text=(
        "You answer a patient's question using ONLY the provided guidebook "
        "excerpts, in 2-4 sentences, citing the ids of the excerpts used."
    ),
    user_text=(
        "Question:\n{question}\n\n"
        "Guidebook excerpts (cite by id):\n{context}\n\n"
        'Reply as JSON: {{"answer": "...", "sources": ["id", ...]}}{reminder}'
    ),
    output_schema=(
        OutputField("answer", "string"),
        OutputField("sources", "string_list"),
    ),
)


# --- stub synthesizers ---

_SECOND_PERSON = {"you": "I", "your": "my", "yours": "mine", "yourself": "myself"}

ASK_THEM_POOL_BATCH1 = [
    "How will the recommended plan fit around my work schedule and family responsibilities?",
    "Which option would my care team suggest for someone with my exact history, and why?",
    "What costs should my household expect with each option under my insurance plan?",
    "Who can my family contact between visits if something changes suddenly at home?",
    "How soon would my clinic want me to decide, given my personal timeline?",
    "What would my doctor choose in my situation, knowing my priorities?",
    "Are there local support groups my clinic recommends near where I live?",
    "How do my other health conditions change the usual advice in my case?",
]

ASK_THEM_POOL_BATCH2 = [
    "What has my clinic seen work well for patients whose values match mine?",
    "How should I bring my family into this decision during the visit?",
    "What follow-up schedule would my doctor set for my specific circumstances?",
    "Which specialists at my clinic would be involved in my care plan?",
    "What should I watch for at home that would change my plan right away?",
    "How flexible is the timing if my personal situation shifts next month?",
    "Can my clinic connect me with another patient who faced my choice?",
    "What paperwork or referrals should my family prepare before the visit?",
]


def _first_person(text: str) -> str:
    def swap(match: re.Match[str]) -> str:
        return _SECOND_PERSON[match.group(0).lower()]

    return re.sub(r"\b(you|your|yours|yourself)\b", swap, text, flags=re.IGNORECASE)


def _split_lines(value: str) -> list[str]:
    return [line.strip() for line in value.splitlines() if line.strip()]


def synthesize_gap_queries(bindings: Mapping[str, str]) -> dict:
    queries: list[str] = []
    for turn in _split_lines(bindings.get("patient_turns", "")):
        query = turn[:120].strip()
        if query and query not in queries:
            queries.append(query)
    for topic in _split_lines(bindings.get("topics", "")):
        if topic not in queries:
            queries.append(topic)
    return {"queries": queries[:5]}


def _extract_option_names(texts: list[str]) -> list[str]:
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(re.findall(r"\b([A-Z][a-z]+ [A-Z][a-z]+)\b", text))
    repeated = [name for name, count in counts.items() if count >= 2]
    repeated.sort(key=lambda name: (-counts[name], name))
    return repeated[:3]


def synthesize_knowledge_panel(bindings: Mapping[str, str]) -> dict:
    items = parse_context(bindings.get("context", ""))
    dimensions = list(REQUIRED_DIMENSIONS)
    if not items:
        options = ["option one", "option two"]
        return {
            "background_summary": "The guidebook does not directly cover the selected topics.",
            "decision_factors": [],
            "options": options,
            "dimensions": dimensions,
            "cells": [
                {"option": option, "dimension": dim, "text": NOT_COVERED, "sources": []}
                for option in options
                for dim in dimensions
            ],
        }

    background = " ".join(first_sentence(text) for _, text in items[:3])
    factors = [{"text": text, "sources": [seg_id]} for seg_id, text in items[:8]]
    options = _extract_option_names([text for _, text in items])
    if len(options) < 2:
        options = ["option one", "option two"]
    cells = []
    for i, option in enumerate(options):
        for j, dim in enumerate(dimensions):
            seg_id, text = items[(i * len(dimensions) + j) % len(items)]
            cells.append(
                {
                    "option": option,
                    "dimension": dim,
                    "text": f"{option} ({dim}): {first_sentence(text)}",
                    "sources": [seg_id],
                }
            )
    return {
        "background_summary": background,
        "decision_factors": factors,
        "options": options,
        "dimensions": dimensions,
        "cells": cells,
    }


def synthesize_journey_narrative(bindings: Mapping[str, str]) -> dict:
    topics = _split_lines(bindings.get("topics", ""))
    elicit = [_first_person(line) for line in _split_lines(bindings.get("elicit_answers", ""))]
    reflections = [_first_person(line) for line in _split_lines(bindings.get("reflection_answers", ""))]
    parts = ["I am getting ready for my next clinic visit."]
    if topics:
        parts.append("I chose to focus on: " + ", ".join(topics) + ".")
    if elicit:
        parts.append("Here is where I stand today: " + " ".join(elicit))
    if reflections:
        parts.append("When I think about what matters most to me: " + " ".join(reflections))
    parts.append("I want to use my time with my care team well.")
    return {"narrative": " ".join(parts)}


def synthesize_visit_candidates(bindings: Mapping[str, str]) -> dict:
    batch = bindings.get("batch", "1").strip()
    factors = _split_lines(bindings.get("panel_factors", ""))
    if batch == "1":
        grounded_prefix = "Can I explain in my own words:"
        ask_pool = ASK_THEM_POOL_BATCH1
    else:
        grounded_prefix = "Could I describe to my doctor:"
        ask_pool = ASK_THEM_POOL_BATCH2
    questions = [f"{grounded_prefix} {text}" for text in factors[:8]]
    questions.extend(ask_pool)
    extra = ASK_THEM_POOL_BATCH2 if batch == "1" else ASK_THEM_POOL_BATCH1
    for question in extra:
        if len(questions) >= 14:
            break
        questions.append(question)
    return {"questions": questions[:20]}


def synthesize_know_them_answer(bindings: Mapping[str, str]) -> dict:
    items = parse_context(bindings.get("context", ""))
    if not items:
        return {"answer": "", "sources": []}
    seg_id, text = items[0]
    answer = first_sentence(text, max_chars=360)
    sources = [seg_id]
    if len(items) > 1 and len(answer) < 200:
        answer = f"{answer} {first_sentence(items[1][1], max_chars=200)}"
        sources.append(items[1][0])
    return {"answer": f"According to the guidebook: {answer}", "sources": sources}


def build_stub_generation_provider() -> StubGenerationProvider:
    provider = StubGenerationProvider()
    provider.register_synthesizer(GAP_QUERIES.template_id, synthesize_gap_queries)
    provider.register_synthesizer(KNOWLEDGE_PANEL.template_id, synthesize_knowledge_panel)
    provider.register_synthesizer(JOURNEY_NARRATIVE.template_id, synthesize_journey_narrative)
    provider.register_synthesizer(VISIT_CANDIDATES.template_id, synthesize_visit_candidates)
    provider.register_synthesizer(KNOW_THEM_ANSWER.template_id, synthesize_know_them_answer)
    return provider
