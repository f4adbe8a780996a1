"""In-memory session store with per-session locks.

Sessions are event-sourced to disk; the in-memory map is the hot copy. On a
cold start a missing session is rebuilt from its event log before use. The
rebuild runs through a replay engine with a non-persisting recorder so the
log is not re-appended.
"""

from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable

from visitprep.errors import SessionNotFound
from visitprep.events import JsonlEventLog
from visitprep.interview import InterviewEngine, SessionState
from visitprep.replay import replay_session


class SessionStore:
    def __init__(self, event_log: JsonlEventLog, replay_engine: Callable[[], InterviewEngine]):
        self.event_log = event_log
        self.replay_engine = replay_engine
        self._sessions: dict[str, SessionState] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    def add(self, state: SessionState) -> None:
        with self._registry_lock:
            self._sessions[state.session_id] = state
            self._locks.setdefault(state.session_id, threading.RLock())

    def _lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            if session_id not in self._locks:
                self._locks[session_id] = threading.RLock()
            return self._locks[session_id]

    @contextmanager
    def locked(self, session_id: str):
        """Yield the session state under its per-session lock."""
        lock = self._lock_for(session_id)
        with lock:
            state = self._sessions.get(session_id)
            if state is None:
                events = self.event_log.session_events(session_id)
                if not events:
                    raise SessionNotFound(f"no session {session_id!r}")
                state = replay_session(events, self.replay_engine())
                self._sessions[session_id] = state
            yield state
