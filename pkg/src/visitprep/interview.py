"""Guided interview engine: topic selection, elicitation, reflection, gates.

One session is a strictly forward walk through the stage path; every patient
action is recorded as an event, and every generated artifact (panel,
narrative, questions) is produced deterministically from the transcript under
the stub providers, which is what makes event replay reconstruct state
exactly.
"""

from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable

from visitprep import narrative as narrative_mod
from visitprep import questions as questions_mod
from visitprep.conversation import (
    ALLOWED_TRANSITIONS,
    TOPICS,
    TOPICS_BY_ID,
    SessionStage,
    Speaker,
    TranscriptEntry,
)
from visitprep.embeddings import EmbeddingProvider
from visitprep.errors import (
    EmptyIndex,
    EmptyInput,
    EmptyNarrative,
    EmptyResponse,
    ReflectionIncomplete,
    UnknownTopic,
    VisitPrepError,
    WrongStage,
)
from visitprep.events import EventRecorder, InMemoryRecorder
from visitprep.gateway import Gateway
from visitprep.grounding import RetrievalRecord
from visitprep.narrative import EditRecord
from visitprep.panel import KnowledgePanel, build_panel
from visitprep.questions import VisitPrepOutput
from visitprep.vector_index import VectorIndex

logger = logging.getLogger(__name__)

OPENING_TEXT = (
    "Welcome. I can help you get ready for your next clinic visit. "
    "Do you have concerns, questions, or a decision you are working through? "
    "Pick one or more topics to get started:\n"
    + "\n".join(f"- {topic.display_name}" for topic in TOPICS)
)

FIRST_ELICIT_QUESTION = (
    "Thanks for choosing your topics. To begin: what do you already know "
    "about them, and what feels unclear or uncertain right now?"
)

FOLLOWUP_ELICIT_QUESTIONS = (
    "What else have you heard or read about this, even if you are not sure it is right?",
    "Is there anything you wish someone had explained to you already?",
    "What worries you most when you think about the next visit?",
)

PANEL_READY_TEXT = (
    "Based on what you shared, I put together a knowledge panel with background, "
    "key decision factors, and an option comparison. Review it, then continue."
)

REVIEW_ACK_TEXT = "Noted. When you are ready, continue to the reflection step."

REFLECTION_DONE_TEXT = (
    "That completes the reflection. Select 'Generate My Journey' when you are ready "
    "to see your story in your own voice."
)

JOURNEY_READY_TEXT = (
    "Here is a draft of your journey in your own voice. Edit anything that does not "
    "sound like you, then confirm it."
)

QUESTIONS_READY_TEXT = (
    "Your visit preparation is ready: five questions you can already answer from the "
    "guidebook, and five worth asking your care team."
)

FIXED_REFLECTION_PROMPTS = (
    "Which factors are most important to you?",
    "Where are you still unsure?",
)


@dataclass
class EngineConfig:
    min_elicit_turns: int = 2
    panel_k: int = 6
    classify_k: int = 4
    threshold: float = 0.60


@dataclass
class SessionState:
    session_id: str
    stage: SessionStage
    selected_topics: list[str] = field(default_factory=list)
    other_label: str | None = None
    transcript: list[TranscriptEntry] = field(default_factory=list)
    panel: KnowledgePanel | None = None
    narrative: EditRecord | None = None
    questions: VisitPrepOutput | None = None
    reflection_prompts: list[str] = field(default_factory=list)
    reflection_answer_count: int = 0
    panel_refresh_used: bool = False
    retrieval_log: list[RetrievalRecord] = field(default_factory=list)
    event_log: object = field(default=None, compare=False, repr=False)

    def topic_display_names(self) -> list[str]:
        names = []
        for topic_id in self.selected_topics:
            name = TOPICS_BY_ID[topic_id].display_name
            if topic_id == "other_concerns" and self.other_label:
                name = f"{name} ({self.other_label})"
            names.append(name)
        return names

    def elicit_turn_count(self) -> int:
        return sum(
            1
            for entry in self.transcript
            if entry.speaker is Speaker.PATIENT and entry.stage is SessionStage.ELICIT_KNOWLEDGE
        )

    def unanswered_prompts(self) -> list[str]:
        return self.reflection_prompts[self.reflection_answer_count:]


class InterviewEngine:
    """Session operations; per-session serialization is the caller's job."""

    def __init__(
        self,
        index_source: Callable[[], VectorIndex | None],
        embed_provider: EmbeddingProvider,
        gateway: Gateway,
        config: EngineConfig | None = None,
        recorder: EventRecorder | None = None,
    ):
        self.index_source = index_source
        self.embed_provider = embed_provider
        self.gateway = gateway
        self.config = config or EngineConfig()
        self.recorder = recorder or InMemoryRecorder()

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _now(at: datetime | None) -> datetime:
        return at if at is not None else datetime.now(timezone.utc)

    def _record(self, state: SessionState, event_type: str, payload: dict, at: datetime) -> None:
        self.recorder.record(state.session_id, event_type, payload, at)

    def _require_stage(self, state: SessionState, *stages: SessionStage) -> None:
        if state.stage not in stages:
            raise WrongStage(
                f"operation requires stage {' or '.join(s.value for s in stages)}, "
                f"session is in {state.stage.value}",
                details={
                    "required": [s.value for s in stages],
                    "actual": state.stage.value,
                },
            )

    def _advance(self, state: SessionState, target: SessionStage) -> None:
        if ALLOWED_TRANSITIONS.get(state.stage) != target:
            raise WrongStage(
                f"illegal transition {state.stage.value} -> {target.value}",
                details={"from": state.stage.value, "to": target.value},
            )
        state.stage = target

    def _append_turn(
        self, state: SessionState, speaker: Speaker, text: str, at: datetime
    ) -> TranscriptEntry:
        entry = TranscriptEntry(
            turn_index=len(state.transcript),
            speaker=speaker,
            text=text,
            timestamp=at,
            stage=state.stage,
        )
        state.transcript.append(entry)
        return entry

    def _current_index(self) -> VectorIndex:
        index = self.index_source()
        if index is None or index.segment_count == 0:
            raise EmptyIndex("no guidebook has been ingested and indexed yet")
        return index

    def _error_event(self, state: SessionState, exc: VisitPrepError, at: datetime) -> None:
        self._record(state, "Error", {"code": exc.code, "message": exc.message}, at)

    # -- operations --------------------------------------------------------

    def start_session(
        self, session_id: str | None = None, at: datetime | None = None
    ) -> SessionState:
        at = self._now(at)
        state = SessionState(
            session_id=session_id or uuid.uuid4().hex,
            stage=SessionStage.TOPIC_SELECTION,
            event_log=self.recorder,
        )
        self._append_turn(state, Speaker.SYSTEM, OPENING_TEXT, at)
        self._record(state, "SessionStarted", {"session_id": state.session_id}, at)
        return state

    def select_topics(
        self,
        state: SessionState,
        topic_ids: list[str],
        other_label: str | None = None,
        at: datetime | None = None,
    ) -> SessionState:
        at = self._now(at)
        self._require_stage(state, SessionStage.TOPIC_SELECTION)
        requested = set(topic_ids)
        if not requested:
            raise EmptyInput("at least one topic must be selected")
        unknown = sorted(requested - set(TOPICS_BY_ID))
        if unknown:
            raise UnknownTopic(f"unknown topic ids: {unknown}", details={"unknown": unknown})
        state.selected_topics = [t.topic_id for t in TOPICS if t.topic_id in requested]
        state.other_label = other_label if "other_concerns" in requested else None
        self._advance(state, SessionStage.ELICIT_KNOWLEDGE)
        self._append_turn(state, Speaker.SYSTEM, FIRST_ELICIT_QUESTION, at)
        self._record(
            state,
            "TopicsSelected",
            {"topic_ids": state.selected_topics, "other_label": state.other_label},
            at,
        )
        return state

    def submit_response(
        self, state: SessionState, text: str, at: datetime | None = None
    ) -> SessionState:
        at = self._now(at)
        self._require_stage(
            state,
            SessionStage.ELICIT_KNOWLEDGE,
            SessionStage.REVIEW_KNOWLEDGE,
            SessionStage.REFLECTION,
        )
        if not text.strip():
            raise EmptyResponse("response text must not be empty")
        stage = state.stage
        self._append_turn(state, Speaker.PATIENT, text, at)
        self._record(state, "PatientTurn", {"text": text}, at)

        if stage is SessionStage.ELICIT_KNOWLEDGE:
            if state.elicit_turn_count() >= self.config.min_elicit_turns:
                self._build_panel(state, at)
            else:
                turn = state.elicit_turn_count() - 1
                follow_up = FOLLOWUP_ELICIT_QUESTIONS[turn % len(FOLLOWUP_ELICIT_QUESTIONS)]
                self._append_turn(state, Speaker.SYSTEM, follow_up, at)
        elif stage is SessionStage.REVIEW_KNOWLEDGE:
            self._append_turn(state, Speaker.SYSTEM, REVIEW_ACK_TEXT, at)
        else:  # Reflection
            state.reflection_answer_count += 1
            next_index = state.reflection_answer_count
            if next_index < len(state.reflection_prompts):
                prompt = state.reflection_prompts[next_index]
                self._append_turn(state, Speaker.SYSTEM, prompt, at)
                self._record(
                    state, "ReflectionPromptIssued", {"index": next_index, "prompt": prompt}, at
                )
            elif next_index == len(state.reflection_prompts):
                self._append_turn(state, Speaker.SYSTEM, REFLECTION_DONE_TEXT, at)
        return state

    def _build_panel(self, state: SessionState, at: datetime) -> None:
        try:
            index = self._current_index()
            panel, records = build_panel(
                state.transcript,
                state.topic_display_names(),
                index,
                self.embed_provider,
                self.gateway,
                k=self.config.panel_k,
            )
        except VisitPrepError as exc:
            self._error_event(state, exc, at)
            raise
        state.panel = panel
        state.retrieval_log.extend(records)
        self._advance(state, SessionStage.REVIEW_KNOWLEDGE)
        self._append_turn(state, Speaker.SYSTEM, PANEL_READY_TEXT, at)
        self._record(
            state,
            "PanelGenerated",
            {
                "panel": panel.to_dict(),
                "retrieval": [r.to_dict() for r in records],
            },
            at,
        )

    def refresh_panel(self, state: SessionState, at: datetime | None = None) -> SessionState:
        """One manual regeneration of the panel while reviewing it."""
        at = self._now(at)
        self._require_stage(state, SessionStage.REVIEW_KNOWLEDGE)
        if state.panel_refresh_used:
            raise WrongStage("the panel has already been refreshed once")
        try:
            index = self._current_index()
            panel, records = build_panel(
                state.transcript,
                state.topic_display_names(),
                index,
                self.embed_provider,
                self.gateway,
                k=self.config.panel_k,
            )
        except VisitPrepError as exc:
            self._error_event(state, exc, at)
            raise
        state.panel = panel
        state.retrieval_log.extend(records)
        state.panel_refresh_used = True
        self._record(
            state,
            "PanelGenerated",
            {
                "panel": panel.to_dict(),
                "retrieval": [r.to_dict() for r in records],
                "refresh": True,
            },
            at,
        )
        return state

    def reflection_prompts(self, state: SessionState, at: datetime | None = None) -> list[str]:
        at = self._now(at)
        self._require_stage(state, SessionStage.REVIEW_KNOWLEDGE)
        prompts = list(FIXED_REFLECTION_PROMPTS)
        for topic_id in state.selected_topics:
            display = TOPICS_BY_ID[topic_id].display_name
            prompts.append(f"What matters most to you about {display}?")
        state.reflection_prompts = prompts
        state.reflection_answer_count = 0
        self._advance(state, SessionStage.REFLECTION)
        self._append_turn(state, Speaker.SYSTEM, prompts[0], at)
        self._record(state, "ReflectionPromptIssued", {"index": 0, "prompt": prompts[0]}, at)
        return prompts

    def request_journey(self, state: SessionState, at: datetime | None = None) -> SessionState:
        at = self._now(at)
        self._require_stage(state, SessionStage.REFLECTION)
        unanswered = state.unanswered_prompts()
        if unanswered:
            raise ReflectionIncomplete(
                f"{len(unanswered)} reflection prompt(s) still need an answer",
                details={"unanswered": unanswered},
            )
        try:
            text = narrative_mod.generate_journey(
                state.transcript, state.topic_display_names(), self.gateway
            )
        except VisitPrepError as exc:
            self._error_event(state, exc, at)
            raise
        state.narrative = narrative_mod.make_edit_record(text)
        self._advance(state, SessionStage.NARRATIVE_DRAFT)
        self._append_turn(state, Speaker.SYSTEM, JOURNEY_READY_TEXT, at)
        self._record(state, "JourneyGenerated", {"narrative": text}, at)
        return state

    def apply_edit(
        self, state: SessionState, edited_text: str, at: datetime | None = None
    ) -> SessionState:
        at = self._now(at)
        self._require_stage(state, SessionStage.NARRATIVE_DRAFT)
        assert state.narrative is not None
        narrative_mod.apply_edit(state.narrative, edited_text)
        self._record(
            state,
            "NarrativeEdited",
            {
                "edited_text": edited_text,
                "token_change_fraction": state.narrative.token_change_fraction,
            },
            at,
        )
        return state

    def confirm_narrative(self, state: SessionState, at: datetime | None = None) -> SessionState:
        """Confirm the narrative, then generate the visit questions.

        Re-invoking after a question-generation failure (stage already
        NarrativeConfirmed, no questions yet) retries generation.
        """
        at = self._now(at)
        if state.stage is SessionStage.NARRATIVE_DRAFT:
            assert state.narrative is not None
            narrative_mod.confirm(state.narrative)
            self._advance(state, SessionStage.NARRATIVE_CONFIRMED)
            self._record(state, "NarrativeConfirmed", {"retry": False}, at)
        elif state.stage is SessionStage.NARRATIVE_CONFIRMED and state.questions is None:
            self._record(state, "NarrativeConfirmed", {"retry": True}, at)
        else:
            self._require_stage(state, SessionStage.NARRATIVE_DRAFT)

        try:
            index = self._current_index()
            assert state.narrative is not None and state.panel is not None
            output, records = questions_mod.generate_visit_questions(
                state.narrative.edited_text,
                state.panel,
                index,
                self.embed_provider,
                self.gateway,
                threshold=self.config.threshold,
                classify_k=self.config.classify_k,
            )
        except VisitPrepError as exc:
            self._error_event(state, exc, at)
            raise
        state.questions = output
        state.retrieval_log.extend(records)
        self._advance(state, SessionStage.QUESTIONS_READY)
        self._append_turn(state, Speaker.SYSTEM, QUESTIONS_READY_TEXT, at)
        self._record(state, "QuestionsGenerated", {"questions": output.to_dict()}, at)
        return state

    def close_session(self, state: SessionState, at: datetime | None = None) -> SessionState:
        at = self._now(at)
        self._require_stage(state, SessionStage.QUESTIONS_READY)
        self._advance(state, SessionStage.CLOSED)
        self._record(state, "SessionClosed", {}, at)
        return state
