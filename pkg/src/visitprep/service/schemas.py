"""Pydantic request/response models for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field

from visitprep.interview import SessionState
from visitprep.questions import VisitPrepOutput


class ErrorBody(BaseModel):
    code: str
    message: str
    details: dict[str, Any] = Field(default_factory=dict)
    retriable: bool = False


class TopicModel(BaseModel):
    topic_id: str
    display_name: str


class TranscriptEntryModel(BaseModel):
    turn_index: int
    speaker: str
    text: str
    timestamp: str
    stage: str


class SelectTopicsRequest(BaseModel):
    topic_ids: list[str]
    other_label: Optional[str] = None


class SubmitResponseRequest(BaseModel):
    text: str


class ApplyEditRequest(BaseModel):
    edited_text: str


class NarrativeModel(BaseModel):
    original_text: str
    edited_text: str
    token_change_fraction: float
    confirmed: bool


class CitationModel(BaseModel):
    book_id: str
    page_number: int


class SessionView(BaseModel):
    session_id: str
    stage: str
    selected_topics: list[str]
    other_label: Optional[str] = None
    transcript: list[TranscriptEntryModel]
    reflection_prompts: list[str]
    reflection_answered: int
    panel: Optional[dict] = None
    narrative: Optional[NarrativeModel] = None
    questions: Optional[dict] = None
    citations: dict[str, CitationModel] = Field(default_factory=dict)

    @classmethod
    def from_state(cls, state: SessionState, index=None) -> "SessionView":
        citations: dict[str, CitationModel] = {}
        if index is not None:
            cited: set[str] = set()
            if state.panel is not None:
                cited |= state.panel.cited_segment_ids()
            if state.questions is not None:
                for q in state.questions.know_them:
                    cited.update(q.sources)
            for segment_id in cited:
                if index.has_segment(segment_id):
                    seg = index.segment(segment_id)
                    citations[segment_id] = CitationModel(
                        book_id=seg.book_id, page_number=seg.page_number
                    )
        return cls(
            session_id=state.session_id,
            stage=state.stage.value,
            selected_topics=list(state.selected_topics),
            other_label=state.other_label,
            transcript=[
                TranscriptEntryModel(**entry.to_dict()) for entry in state.transcript
            ],
            reflection_prompts=list(state.reflection_prompts),
            reflection_answered=state.reflection_answer_count,
            panel=state.panel.to_dict() if state.panel else None,
            narrative=NarrativeModel(**state.narrative.to_dict()) if state.narrative else None,
            questions=state.questions.to_dict() if state.questions else None,
            citations=citations,
        )


class CreateSessionResponse(BaseModel):
    session_id: str
    stage: str
    topics: list[TopicModel]
    transcript: list[TranscriptEntryModel]


class QuestionsResponse(BaseModel):
    know_them: list[dict]
    ask_them: list[dict]
    threshold_used: float

    @classmethod
    def from_output(cls, output: VisitPrepOutput) -> "QuestionsResponse":
        data = output.to_dict()
        return cls(**data)


class IngestRequest(BaseModel):
    path: str
    book_id: Optional[str] = None


class IngestJobModel(BaseModel):
    job_id: str
    book_id: str
    status: str
    progress: float
    report: Optional[dict] = None
    error: Optional[str] = None
    created_at: str
