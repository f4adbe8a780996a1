"""Shared exception hierarchy.

Every domain error carries a stable ``code`` (its class name) plus an
optional ``details`` dict; the HTTP layer maps these onto structured
error bodies without inspecting message strings.
"""

from __future__ import annotations

from typing import Any


class VisitPrepError(Exception):
    """Base class for all domain errors."""

    def __init__(self, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    @property
    def code(self) -> str:
        return type(self).__name__


# --- corpus ingestion ---

class EmptyFolder(VisitPrepError):
    pass


class DuplicatePageNumber(VisitPrepError):
    pass


class UnparseableDocument(VisitPrepError):
    pass


class InvalidConfig(VisitPrepError):
    pass


# --- embedding / index ---

class ProviderUnavailable(VisitPrepError):
    pass


class ProviderTimeout(VisitPrepError):
    pass


class DimensionMismatch(VisitPrepError):
    pass


class ProviderTagMismatch(VisitPrepError):
    pass


class ZeroVector(VisitPrepError):
    pass


class EmptyInput(VisitPrepError):
    pass


class EmptyIndex(VisitPrepError):
    pass


class CorruptIndexFile(VisitPrepError):
    pass


# --- llm gateway ---

class SchemaViolation(VisitPrepError):
    pass


class TemplateBindingError(VisitPrepError):
    pass


class StubFixtureMissing(ProviderUnavailable):
    """The stub provider has neither a fixture nor a synthesizer for a template."""


# --- interview engine ---

class UnknownTopic(VisitPrepError):
    pass


class WrongStage(VisitPrepError):
    pass


class EmptyResponse(VisitPrepError):
    pass


class EmptyTranscript(VisitPrepError):
    pass


class ReflectionIncomplete(VisitPrepError):
    pass


# --- knowledge panel / questions ---

class GroundingViolation(VisitPrepError):
    pass


class InsufficientCandidates(VisitPrepError):
    pass


# --- narrative ---

class StyleViolation(VisitPrepError):
    pass


class EmptyNarrative(VisitPrepError):
    pass


class EmptyOriginal(VisitPrepError):
    pass


# --- session service ---

class SessionNotFound(VisitPrepError):
    pass


class CorruptEventLog(VisitPrepError):
    pass


class JobNotFound(VisitPrepError):
    pass


class Unauthorized(VisitPrepError):
    pass
