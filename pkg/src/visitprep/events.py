"""Append-only session event log with line checksums and replay support.

Every user activity lands here as one JSON line per event. The checksum is
over the canonical serialization of the record (minus the checksum itself),
so truncation or tampering surfaces as ``CorruptEventLog`` on read.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Iterator, Protocol

from visitprep.errors import CorruptEventLog

EVENT_TYPES = (
    "SessionStarted",
    "TopicsSelected",
    "PatientTurn",
    "PanelGenerated",
    "ReflectionPromptIssued",
    "JourneyGenerated",
    "NarrativeEdited",
    "NarrativeConfirmed",
    "QuestionsGenerated",
    "SessionClosed",
    "Error",
)


@dataclass(frozen=True)
class SessionEvent:
    event_index: int
    session_id: str
    event_type: str
    payload: dict
    timestamp: str  # ISO-8601

    def to_dict(self) -> dict:
        return {
            "event_index": self.event_index,
            "session_id": self.session_id,
            "event_type": self.event_type,
            "payload": self.payload,
            "timestamp": self.timestamp,
        }

    @property
    def at(self) -> datetime:
        return datetime.fromisoformat(self.timestamp)


def _checksum(record: dict) -> str:
    canonical = json.dumps(record, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


class EventRecorder(Protocol):
    def record(self, session_id: str, event_type: str, payload: dict, at: datetime) -> SessionEvent: ...


class InMemoryRecorder:
    """Recorder for tests and replay; keeps events per session in memory."""

    def __init__(self):
        self.events: dict[str, list[SessionEvent]] = {}

    def record(self, session_id: str, event_type: str, payload: dict, at: datetime) -> SessionEvent:
        assert event_type in EVENT_TYPES, event_type
        bucket = self.events.setdefault(session_id, [])
        event = SessionEvent(
            event_index=len(bucket),
            session_id=session_id,
            event_type=event_type,
            payload=payload,
            timestamp=at.isoformat(),
        )
        bucket.append(event)
        return event

    def session_events(self, session_id: str) -> list[SessionEvent]:
        return list(self.events.get(session_id, []))


class JsonlEventLog:
    """One ``<data_dir>/sessions/<session_id>.jsonl`` file per session."""

    def __init__(self, data_dir: str | Path):
        self.sessions_dir = Path(data_dir) / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._counters: dict[str, int] = {}

    def _path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def _next_index(self, session_id: str) -> int:
        if session_id not in self._counters:
            path = self._path(session_id)
            count = 0
            if path.exists():
                with path.open("r", encoding="utf-8") as fh:
                    count = sum(1 for line in fh if line.strip())
            self._counters[session_id] = count
        return self._counters[session_id]

    def record(self, session_id: str, event_type: str, payload: dict, at: datetime) -> SessionEvent:
        assert event_type in EVENT_TYPES, event_type
        with self._lock:
            index = self._next_index(session_id)
            event = SessionEvent(
                event_index=index,
                session_id=session_id,
                event_type=event_type,
                payload=payload,
                timestamp=at.isoformat(),
            )
            record = event.to_dict()
            record["checksum"] = _checksum(event.to_dict())
            with self._path(session_id).open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._counters[session_id] = index + 1
        return event

    def session_events(self, session_id: str) -> list[SessionEvent]:
        return list(self.iter_session(session_id))

    def iter_session(self, session_id: str) -> Iterator[SessionEvent]:
        path = self._path(session_id)
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorruptEventLog(
                        f"unreadable event at {path.name}:{line_no}: {exc}"
                    ) from exc
                stored = record.pop("checksum", None)
                if stored != _checksum(record):
                    raise CorruptEventLog(
                        f"checksum mismatch at {path.name}:{line_no}",
                        details={"line": line_no},
                    )
                yield SessionEvent(
                    event_index=record["event_index"],
                    session_id=record["session_id"],
                    event_type=record["event_type"],
                    payload=record["payload"],
                    timestamp=record["timestamp"],
                )

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.jsonl"))

    def purge_before(self, cutoff: datetime) -> list[str]:
        """Delete session logs whose newest event predates the cutoff."""
        removed = []
        for session_id in self.list_sessions():
            events = self.session_events(session_id)
            if events and events[-1].at < cutoff:
                self._path(session_id).unlink()
                self._counters.pop(session_id, None)
                removed.append(session_id)
        return removed
