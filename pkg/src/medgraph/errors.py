"""Exception types shared across the pipeline."""

from __future__ import annotations


class MedGraphError(Exception):
    """Base class for all pipeline errors."""


class EmptyInput(MedGraphError):
    """Input payload contains no usable entries."""


class ExtractorUnavailable(MedGraphError):
    """External entity-extraction service unreachable after retries."""


class ApiAuthError(MedGraphError):
    """Ontology API rejected the credentials (HTTP 401/403) or none were set."""


class ApiUnavailable(MedGraphError):
    """Ontology API still failing after the retry budget was spent."""


class UnsanitizableText(MedGraphError):
    """Text sanitizes to an empty node id."""


class DuplicateConcept(MedGraphError):
    """Two input concepts collide on the same node id."""


class SinkError(MedGraphError):
    """Writing an output artifact failed."""


class DimensionMismatch(MedGraphError):
    """Two vectors of different dimensions were compared."""


class ProviderError(MedGraphError):
    """An embedding provider could not supply a usable vector."""


class ParseError(MedGraphError):
    """Malformed artifact file; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class DuplicatePair(MedGraphError):
    """The same unordered concept pair was annotated twice."""


class UnknownConcept(MedGraphError):
    """An evaluation pair names a concept absent from the graph."""


class ConfigError(MedGraphError):
    """Invalid or inconsistent pipeline configuration."""
