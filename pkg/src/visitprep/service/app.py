"""FastAPI application wiring the interview engine behind HTTP endpoints.

Domain errors map to structured ``{code, message, details, retriable}``
bodies: stage-gate violations are 409, validation problems 422, provider and
generation failures 502 with the retriable flag set.
"""

from __future__ import annotations

import logging
import uuid
from contextlib import asynccontextmanager
from email import policy
from email.parser import BytesParser
from pathlib import Path

from fastapi import Depends, FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from visitprep import embeddings as embeddings_mod
from visitprep.conversation import TOPICS
from visitprep.errors import (
    CorruptEventLog,
    CorruptIndexFile,
    JobNotFound,
    SessionNotFound,
    Unauthorized,
    VisitPrepError,
    WrongStage,
)
from visitprep.events import JsonlEventLog
from visitprep.gateway import Gateway, HttpGenerationProvider
from visitprep.ingest.segmenter import SegmentationConfig
from visitprep.interview import EngineConfig, InterviewEngine
from visitprep.prompts import build_stub_generation_provider
from visitprep.service.config import ServiceConfig
from visitprep.service.jobs import IndexHolder, IngestManager
from visitprep.service.schemas import (
    ApplyEditRequest,
    CreateSessionResponse,
    ErrorBody,
    IngestJobModel,
    IngestRequest,
    NarrativeModel,
    QuestionsResponse,
    SelectTopicsRequest,
    SessionView,
    SubmitResponseRequest,
    TopicModel,
    TranscriptEntryModel,
)
from visitprep.service.store import SessionStore

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "WrongStage": 409,
    "ReflectionIncomplete": 409,
    "EmptyIndex": 409,
    "UnknownTopic": 422,
    "EmptyResponse": 422,
    "EmptyInput": 422,
    "EmptyNarrative": 422,
    "EmptyOriginal": 422,
    "InvalidConfig": 422,
    "TemplateBindingError": 422,
    "EmptyFolder": 422,
    "DuplicatePageNumber": 422,
    "SessionNotFound": 404,
    "JobNotFound": 404,
    "Unauthorized": 401,
    "ProviderUnavailable": 502,
    "StubFixtureMissing": 502,
    "ProviderTimeout": 502,
    "SchemaViolation": 502,
    "GroundingViolation": 502,
    "StyleViolation": 502,
    "InsufficientCandidates": 502,
    "CorruptEventLog": 500,
    "CorruptIndexFile": 500,
}
_RETRIABLE = {
    "ProviderUnavailable",
    "ProviderTimeout",
    "StubFixtureMissing",
    "SchemaViolation",
    "GroundingViolation",
    "StyleViolation",
    "InsufficientCandidates",
}


def build_runtime(config: ServiceConfig) -> dict:
    """Construct providers, engines, store and job manager for one app."""
    config.data_dir.mkdir(parents=True, exist_ok=True)

    if config.stub_mode:
        embed_provider = embeddings_mod.StubEmbeddingProvider(config.stub_dimension)
        generation_provider = build_stub_generation_provider()
        if config.fixture_dir and config.fixture_dir.is_dir():
            generation_provider.load_fixture_dir(config.fixture_dir)
    else:
        embed_provider = embeddings_mod.HttpEmbeddingProvider(
            endpoint=config.embed_endpoint,
            model=config.embed_model,
            api_key=config.provider_key,
        )
        generation_provider = HttpGenerationProvider(
            endpoint=config.llm_endpoint,
            model=config.llm_model,
            api_key=config.provider_key,
        )

    gateway = Gateway(generation_provider, max_concurrent=config.llm_max_concurrent)
    holder = IndexHolder(config.index_dir)
    event_log = JsonlEventLog(config.data_dir)
    engine_config = EngineConfig(
        min_elicit_turns=config.min_elicit_turns,
        panel_k=config.panel_k,
        classify_k=config.classify_k,
        threshold=config.threshold,
    )
    engine = InterviewEngine(
        index_source=holder.get,
        embed_provider=embed_provider,
        gateway=gateway,
        config=engine_config,
        recorder=event_log,
    )

    def replay_engine() -> InterviewEngine:
        return InterviewEngine(
            index_source=holder.get,
            embed_provider=embed_provider,
            gateway=gateway,
            config=engine_config,
        )

    store = SessionStore(event_log, replay_engine)
    jobs = IngestManager(
        holder=holder,
        embed_provider=embed_provider,
        segmentation=SegmentationConfig(
            max_chars=config.max_chars,
            overlap_chars=config.overlap_chars,
            boundary_preference=config.boundary_preference,
        ),
        work_dir=config.data_dir / "staging",
    )
    return {
        "config": config,
        "engine": engine,
        "store": store,
        "jobs": jobs,
        "holder": holder,
        "event_log": event_log,
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig.from_env()
    runtime = build_runtime(config)
    engine: InterviewEngine = runtime["engine"]
    store: SessionStore = runtime["store"]
    jobs: IngestManager = runtime["jobs"]

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        jobs.shutdown()

    app = FastAPI(title="visitprep", version="0.1.0", lifespan=lifespan)
    app.state.runtime = runtime

    @app.exception_handler(VisitPrepError)
    async def domain_error_handler(request: Request, exc: VisitPrepError):
        status = _STATUS_BY_CODE.get(exc.code, 500)
        body = ErrorBody(
            code=exc.code,
            message=exc.message,
            details=_jsonable(exc.details),
            retriable=exc.code in _RETRIABLE,
        )
        return JSONResponse(status_code=status, content=body.model_dump())

    def require_admin(request: Request) -> None:
        token = config.admin_token
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise Unauthorized("admin endpoints require a valid bearer token")

    # -- patient session endpoints --------------------------------------

    @app.post("/api/sessions", status_code=201, response_model=CreateSessionResponse)
    def create_session() -> CreateSessionResponse:
        state = engine.start_session()
        store.add(state)
        return CreateSessionResponse(
            session_id=state.session_id,
            stage=state.stage.value,
            topics=[TopicModel(topic_id=t.topic_id, display_name=t.display_name) for t in TOPICS],
            transcript=[TranscriptEntryModel(**e.to_dict()) for e in state.transcript],
        )

    @app.get("/api/topics", response_model=list[TopicModel])
    def list_topics() -> list[TopicModel]:
        return [TopicModel(topic_id=t.topic_id, display_name=t.display_name) for t in TOPICS]

    @app.get("/api/sessions/{session_id}", response_model=SessionView)
    def get_session(session_id: str) -> SessionView:
        with store.locked(session_id) as state:
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.post("/api/sessions/{session_id}/topics", response_model=SessionView)
    def select_topics(session_id: str, body: SelectTopicsRequest) -> SessionView:
        with store.locked(session_id) as state:
            engine.select_topics(state, body.topic_ids, other_label=body.other_label)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.post("/api/sessions/{session_id}/responses", response_model=SessionView)
    def submit_response(session_id: str, body: SubmitResponseRequest) -> SessionView:
        with store.locked(session_id) as state:
            engine.submit_response(state, body.text)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.get("/api/sessions/{session_id}/panel")
    def get_panel(session_id: str) -> dict:
        with store.locked(session_id) as state:
            if state.panel is None:
                raise WrongStage(
                    "the knowledge panel has not been generated yet",
                    details={"stage": state.stage.value},
                )
            return state.panel.to_dict()

    @app.post("/api/sessions/{session_id}/panel/refresh", response_model=SessionView)
    def refresh_panel(session_id: str) -> SessionView:
        with store.locked(session_id) as state:
            engine.refresh_panel(state)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.post("/api/sessions/{session_id}/reflection", response_model=SessionView)
    def start_reflection(session_id: str) -> SessionView:
        with store.locked(session_id) as state:
            engine.reflection_prompts(state)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.post("/api/sessions/{session_id}/journey", response_model=SessionView)
    def request_journey(session_id: str) -> SessionView:
        with store.locked(session_id) as state:
            engine.request_journey(state)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.put("/api/sessions/{session_id}/narrative", response_model=NarrativeModel)
    def apply_edit(session_id: str, body: ApplyEditRequest) -> NarrativeModel:
        with store.locked(session_id) as state:
            engine.apply_edit(state, body.edited_text)
            assert state.narrative is not None
            return NarrativeModel(**state.narrative.to_dict())

    @app.post("/api/sessions/{session_id}/narrative/confirm", response_model=SessionView)
    def confirm_narrative(session_id: str) -> SessionView:
        with store.locked(session_id) as state:
            engine.confirm_narrative(state)
            return SessionView.from_state(state, index=runtime["holder"].get())

    @app.get("/api/sessions/{session_id}/questions", response_model=QuestionsResponse)
    def get_questions(session_id: str) -> QuestionsResponse:
        with store.locked(session_id) as state:
            if state.questions is None:
                raise WrongStage(
                    "visit questions are not ready; confirm the narrative first",
                    details={"stage": state.stage.value},
                )
            return QuestionsResponse.from_output(state.questions)

    # -- admin endpoints -------------------------------------------------

    @app.post(
        "/api/admin/books",
        status_code=202,
        response_model=IngestJobModel,
        dependencies=[Depends(require_admin)],
    )
    async def upload_book(request: Request) -> IngestJobModel:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            body = await request.body()
            book_dir, book_id = _unpack_multipart(config, content_type, body)
        else:
            payload = IngestRequest.model_validate(await request.json())
            book_dir = Path(payload.path)
            book_id = payload.book_id
        job = jobs.submit(book_dir, book_id=book_id)
        return IngestJobModel(**job.snapshot())

    @app.get(
        "/api/admin/ingest-jobs/{job_id}",
        response_model=IngestJobModel,
        dependencies=[Depends(require_admin)],
    )
    def ingest_job_status(job_id: str) -> IngestJobModel:
        job = jobs.get(job_id)
        if job is None:
            raise JobNotFound(f"no ingest job {job_id!r}")
        return IngestJobModel(**job.snapshot())

    @app.get("/api/healthz")
    def healthz() -> dict:
        index = runtime["holder"].get()
        return {
            "status": "ok",
            "stub_mode": config.stub_mode,
            "indexed_segments": index.segment_count if index else 0,
        }

    frontend = config.frontend_dir
    if frontend is None:
        bundled = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        frontend = bundled if bundled.is_dir() else None
    if frontend and frontend.is_dir():
        app.mount("/app", StaticFiles(directory=str(frontend), html=True), name="app")

    return app


def _unpack_multipart(config: ServiceConfig, content_type: str, body: bytes) -> tuple[Path, str | None]:
    """Write uploaded page files into a fresh folder; returns (folder, book_id)."""
    message = BytesParser(policy=policy.default).parsebytes(
        b"Content-Type: " + content_type.encode("utf-8") + b"\r\n\r\n" + body
    )
    upload_dir = config.data_dir / "uploads" / uuid.uuid4().hex
    upload_dir.mkdir(parents=True, exist_ok=True)
    book_id: str | None = None
    file_count = 0
    for part in message.iter_parts():
        filename = part.get_filename()
        if filename:
            safe_name = Path(filename).name
            payload = part.get_payload(decode=True) or b""
            (upload_dir / safe_name).write_bytes(payload)
            file_count += 1
        elif part.get_param("name", header="content-disposition") == "book_id":
            book_id = part.get_content().strip()
    logger.info("received %d uploaded page files into %s", file_count, upload_dir)
    return upload_dir, book_id


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)
