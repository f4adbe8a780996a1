"""Shared interview vocabulary: stages, topics, speakers, transcript entries."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from enum import Enum


class SessionStage(str, Enum):
    TOPIC_SELECTION = "TopicSelection"
    ELICIT_KNOWLEDGE = "ElicitKnowledge"
    REVIEW_KNOWLEDGE = "ReviewKnowledge"
    REFLECTION = "Reflection"
    NARRATIVE_DRAFT = "NarrativeDraft"
    NARRATIVE_CONFIRMED = "NarrativeConfirmed"
    QUESTIONS_READY = "QuestionsReady"
    CLOSED = "Closed"


STAGE_ORDER = list(SessionStage)

# The interview only ever moves forward along this path.
ALLOWED_TRANSITIONS: dict[SessionStage, SessionStage] = {
    SessionStage.TOPIC_SELECTION: SessionStage.ELICIT_KNOWLEDGE,
    SessionStage.ELICIT_KNOWLEDGE: SessionStage.REVIEW_KNOWLEDGE,
    SessionStage.REVIEW_KNOWLEDGE: SessionStage.REFLECTION,
    SessionStage.REFLECTION: SessionStage.NARRATIVE_DRAFT,
    SessionStage.NARRATIVE_DRAFT: SessionStage.NARRATIVE_CONFIRMED,
    SessionStage.NARRATIVE_CONFIRMED: SessionStage.QUESTIONS_READY,
    SessionStage.QUESTIONS_READY: SessionStage.CLOSED,
}


def stage_at_least(stage: SessionStage, floor: SessionStage) -> bool:
    return STAGE_ORDER.index(stage) >= STAGE_ORDER.index(floor)


class Speaker(str, Enum):
    SYSTEM = "System"
    PATIENT = "Patient"


@dataclass(frozen=True)
class Topic:
    topic_id: str
    display_name: str


# The fixed eight-entry topic menu.
TOPICS: tuple[Topic, ...] = (
    Topic("diagnosis_screening", "Diagnosis and Screening"),
    Topic("treatment_plan", "Treatment Plan"),
    Topic("physical_wellness", "Physical Wellness"),
    Topic("emotional_mental_health", "Emotional and Mental Health"),
    Topic("nutrition_diet", "Nutrition and Dietary Guidelines"),
    Topic("long_term_management", "Long-Term Management and Monitoring"),
    Topic("insurance_financial", "Insurance and Financial Support"),
    Topic("other_concerns", "Other Concerns"),
)

TOPICS_BY_ID: dict[str, Topic] = {topic.topic_id: topic for topic in TOPICS}


@dataclass(frozen=True)
class TranscriptEntry:
    turn_index: int
    speaker: Speaker
    text: str
    timestamp: datetime
    stage: SessionStage

    def to_dict(self) -> dict:
        return {
            "turn_index": self.turn_index,
            "speaker": self.speaker.value,
            "text": self.text,
            "timestamp": self.timestamp.isoformat(),
            "stage": self.stage.value,
        }


def patient_turns(transcript: list[TranscriptEntry]) -> list[str]:
    return [entry.text for entry in transcript if entry.speaker is Speaker.PATIENT]


def render_transcript(transcript: list[TranscriptEntry]) -> str:
    """One flattened line per turn, for prompt bindings."""
    return "\n".join(
        f"{entry.speaker.value}: {' '.join(entry.text.split())}" for entry in transcript
    )
