"""First-person journey narrative: generation, patient edits, change metric.

The edit metric is token-level Levenshtein distance over whitespace-split
tokens divided by the original token count, so an unedited confirmation is a
zero-fraction record and the "did they edit" statistic falls out of
fraction > 0.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from visitprep import prompts
from visitprep.conversation import (
    SessionStage,
    Speaker,
    TranscriptEntry,
    render_transcript,
)
from visitprep.errors import EmptyNarrative, EmptyOriginal, StyleViolation
from visitprep.gateway import Gateway

logger = logging.getLogger(__name__)

_FIRST_PERSON_RE = re.compile(r"\b(i|me|my|mine|myself)\b", re.IGNORECASE)
_SECOND_PERSON_RE = re.compile(r"\b(you|your|yours|yourself)\b", re.IGNORECASE)


@dataclass
class EditRecord:
    original_text: str
    edited_text: str
    token_change_fraction: float
    confirmed: bool = False

    def to_dict(self) -> dict:
        return {
            "original_text": self.original_text,
            "edited_text": self.edited_text,
            "token_change_fraction": self.token_change_fraction,
            "confirmed": self.confirmed,
        }


def token_levenshtein(a: list[str], b: list[str]) -> int:
    """Edit distance over token sequences (insert/delete/substitute, unit cost)."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, token_a in enumerate(a, start=1):
        current = [i] + [0] * len(b)
        for j, token_b in enumerate(b, start=1):
            cost = 0 if token_a == token_b else 1
            current[j] = min(
                previous[j] + 1,        # delete
                current[j - 1] + 1,     # insert
                previous[j - 1] + cost, # substitute / keep
            )
        previous = current
    return previous[len(b)]


def token_change_fraction(original: str, edited: str) -> float:
    original_tokens = original.split()
    if not original_tokens:
        raise EmptyOriginal("original narrative has no tokens")
    distance = token_levenshtein(original_tokens, edited.split())
    return distance / len(original_tokens)


def check_style(text: str, topic_names: list[str]) -> list[str]:
    """Return the list of style problems; empty means acceptable."""
    problems = []
    if not _FIRST_PERSON_RE.search(text):
        problems.append("no first-person pronoun")
    if _SECOND_PERSON_RE.search(text):
        problems.append("addresses the patient in the second person")
    lowered = text.lower()
    for name in topic_names:
        if name.lower() not in lowered:
            problems.append(f"does not mention selected topic {name!r}")
    return problems


def generate_journey(
    transcript: list[TranscriptEntry],
    topic_names: list[str],
    gateway: Gateway,
) -> str:
    """Generate the first-person narrative; one regeneration on style failure."""
    elicit_answers = [
        " ".join(entry.text.split())
        for entry in transcript
        if entry.speaker is Speaker.PATIENT and entry.stage is SessionStage.ELICIT_KNOWLEDGE
    ]
    reflection_answers = [
        " ".join(entry.text.split())
        for entry in transcript
        if entry.speaker is Speaker.PATIENT and entry.stage is SessionStage.REFLECTION
    ]
    bindings = {
        "topics": "\n".join(topic_names),
        "elicit_answers": "\n".join(elicit_answers),
        "reflection_answers": "\n".join(reflection_answers),
        "transcript": render_transcript(transcript),
        "reminder": "",
    }
    problems: list[str] = []
    for attempt in (1, 2):
        result = gateway.generate_structured(prompts.JOURNEY_NARRATIVE, bindings)
        text = result.fields["narrative"].strip()
        problems = check_style(text, topic_names) if text else ["empty narrative"]
        if not problems:
            return text
        logger.warning("narrative attempt %d rejected: %s", attempt, problems)
        bindings = {
            **bindings,
            "reminder": (
                "\n\nIMPORTANT: write strictly in the first person, never say 'you', "
                "and mention every selected topic by name."
            ),
        }
    raise StyleViolation(
        f"narrative failed style checks after regeneration: {problems}",
        details={"problems": problems},
    )


def make_edit_record(original_text: str) -> EditRecord:
    return EditRecord(
        original_text=original_text,
        edited_text=original_text,
        token_change_fraction=0.0,
        confirmed=False,
    )


def apply_edit(record: EditRecord, edited_text: str) -> EditRecord:
    """Overwrite the edit (original stays fixed) and recompute the fraction."""
    if not edited_text.strip():
        raise EmptyNarrative("edited narrative must not be empty")
    record.edited_text = edited_text
    record.token_change_fraction = token_change_fraction(record.original_text, edited_text)
    return record


def confirm(record: EditRecord) -> EditRecord:
    record.confirmed = True
    return record
