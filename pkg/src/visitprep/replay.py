"""Reconstruct session state by re-driving the engine from its event log.

Only patient-action events steer the replay; system-generated events
(PanelGenerated, QuestionsGenerated, later ReflectionPromptIssued entries)
are byproducts that the deterministic stub providers regenerate identically.
Timestamps are taken from the log so replayed transcripts compare equal.
"""

from __future__ import annotations

import logging

from visitprep.errors import CorruptEventLog, VisitPrepError
from visitprep.events import SessionEvent
from visitprep.interview import InterviewEngine, SessionState

logger = logging.getLogger(__name__)


def replay_session(events: list[SessionEvent], engine: InterviewEngine) -> SessionState:
    """Replay one session's events through the domain operations."""
    if not events:
        raise CorruptEventLog("cannot replay an empty event log")
    state: SessionState | None = None
    for event in events:
        try:
            state = _apply(event, state, engine)
        except VisitPrepError as exc:
            # The original run hit (and logged) the same deterministic error.
            logger.debug("replay op for %s failed as originally: %s", event.event_type, exc)
    if state is None:
        raise CorruptEventLog("event log has no SessionStarted event")
    return state


def _apply(
    event: SessionEvent, state: SessionState | None, engine: InterviewEngine
) -> SessionState | None:
    at = event.at
    if event.event_type == "SessionStarted":
        return engine.start_session(session_id=event.payload["session_id"], at=at)
    if state is None:
        raise CorruptEventLog(
            f"event {event.event_type} at index {event.event_index} precedes SessionStarted"
        )
    if event.event_type == "TopicsSelected":
        engine.select_topics(
            state,
            event.payload["topic_ids"],
            other_label=event.payload.get("other_label"),
            at=at,
        )
    elif event.event_type == "PatientTurn":
        engine.submit_response(state, event.payload["text"], at=at)
    elif event.event_type == "ReflectionPromptIssued":
        if event.payload.get("index") == 0:
            engine.reflection_prompts(state, at=at)
        # later prompts are re-issued by submit_response during replay
    elif event.event_type == "JourneyGenerated":
        engine.request_journey(state, at=at)
    elif event.event_type == "NarrativeEdited":
        engine.apply_edit(state, event.payload["edited_text"], at=at)
    elif event.event_type == "NarrativeConfirmed":
        engine.confirm_narrative(state, at=at)
    elif event.event_type == "SessionClosed":
        engine.close_session(state, at=at)
    elif event.event_type == "PanelGenerated" and event.payload.get("refresh"):
        engine.refresh_panel(state, at=at)
    # PanelGenerated (initial), QuestionsGenerated and Error events are
    # regenerated side effects, not patient actions.
    return state
