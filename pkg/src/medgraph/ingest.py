"""User input handling: structured term lists and entity extraction from free text.

Two extractor backends are provided: a deterministic gazetteer scanner
(longest-match-first over a curated term list) and a thin client for an
external NER HTTP service.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Protocol

import requests

from .errors import EmptyInput, ExtractorUnavailable


def normalize(text: str) -> str:
    """Lowercase, collapse whitespace runs to single spaces, and trim."""
    return " ".join(text.lower().split())


class InputMode(str, Enum):
    STRUCTURED = "structured"
    UNSTRUCTURED = "unstructured"


class ConceptSource(str, Enum):
    USER = "user"
    EXTRACTED = "extracted"


@dataclass(frozen=True)
class RawInput:
    """A single user submission, either a term list or a free-text document."""

    mode: InputMode
    payload: str

    def __post_init__(self) -> None:
        if not self.payload.strip():
            raise EmptyInput("input payload is empty")

    @classmethod
    def structured(cls, terms: Iterable[str]) -> "RawInput":
        entries = list(terms)
        for entry in entries:
            if "\n" in entry or "\r" in entry:
                raise ValueError(f"structured entry contains a newline: {entry!r}")
        return cls(InputMode.STRUCTURED, "\n".join(entries))

    @classmethod
    def unstructured(cls, text: str) -> "RawInput":
        return cls(InputMode.UNSTRUCTURED, text)

    def entries(self) -> list[str]:
        return self.payload.splitlines()


@dataclass(frozen=True)
class Concept:
    """A medical term with provenance; normalized_text is derived from raw_text."""

    raw_text: str
    source: ConceptSource
    normalized_text: str = ""

    def __post_init__(self) -> None:
        expected = normalize(self.raw_text)
        if not self.normalized_text:
            object.__setattr__(self, "normalized_text", expected)
        elif self.normalized_text != expected:
            raise ValueError(
                f"normalized_text {self.normalized_text!r} does not match "
                f"normalize({self.raw_text!r}) = {expected!r}"
            )
        if not self.normalized_text:
            raise ValueError(f"concept text is blank: {self.raw_text!r}")

    def to_dict(self) -> dict[str, str]:
        return {
            "raw_text": self.raw_text,
            "normalized_text": self.normalized_text,
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Concept":
        return cls(
            raw_text=str(data["raw_text"]),
            source=ConceptSource(data["source"]),
            normalized_text=str(data.get("normalized_text", "")),
        )


def parse_structured(raw: RawInput) -> list[Concept]:
    """Turn a structured term list into user-provided concepts, order preserved.

    Raises:
        EmptyInput: no entry survives a whitespace trim.
    """
    if raw.mode is not InputMode.STRUCTURED:
        raise ValueError(f"expected structured input, got {raw.mode.value}")
    entries = [entry for entry in raw.entries() if entry.strip()]
    if not entries:
        raise EmptyInput("no non-blank entries in structured input")
    return [Concept(entry, ConceptSource.USER) for entry in entries]


@dataclass(frozen=True)
class EntitySpan:
    text: str
    start: int
    end: int


class EntityExtractor(Protocol):
    def spans(self, text: str) -> list[EntitySpan]: ...


class GazetteerExtractor:
    """Deterministic dictionary matcher: longest match first, token-boundary
    anchored, case- and whitespace-insensitive."""

    def __init__(self, terms: Iterable[str]):
        normalized = []
        seen: set[str] = set()
        for term in terms:
            norm = normalize(term)
            if norm and norm not in seen:
                seen.add(norm)
                normalized.append(norm)
        self.terms = normalized
        # Alternation ordered by descending length so the regex engine prefers
        # the longest entry at any position; \s+ between tokens tolerates the
        # source document's raw whitespace.
        alternatives = [
            r"\s+".join(re.escape(tok) for tok in term.split())
            for term in sorted(normalized, key=lambda t: (-len(t), t))
        ]
        self._pattern = (
            re.compile(r"(?<!\w)(?:" + "|".join(alternatives) + r")(?!\w)", re.IGNORECASE)
            if alternatives
            else None
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "GazetteerExtractor":
        terms = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                terms.append(line)
        return cls(terms)

    def spans(self, text: str) -> list[EntitySpan]:
        if self._pattern is None:
            return []
        return [
            EntitySpan(match.group(0), match.start(), match.end())
            for match in self._pattern.finditer(text)
        ]


class NerServiceExtractor:
    """Client for an external NER service: POST /ner {"text": ...} ->
    {"entities": [{"text", "start", "end"}]}."""

    def __init__(
        self,
        url: str,
        *,
        timeout: float = 10.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        session: requests.Session | None = None,
        sleep=time.sleep,
    ):
        self.url = url.rstrip("/")
        if not self.url.endswith("/ner"):
            self.url += "/ner"
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.session = session or requests.Session()
        self._sleep = sleep

    def spans(self, text: str) -> list[EntitySpan]:
        last_failure = ""
        for attempt in range(self.max_retries + 1):
            try:
                response = self.session.post(self.url, json={"text": text}, timeout=self.timeout)
            except requests.RequestException as exc:
                last_failure = str(exc)
            else:
                if response.status_code == 200:
                    entities = response.json().get("entities", [])
                    return [
                        EntitySpan(str(e["text"]), int(e["start"]), int(e["end"]))
                        for e in entities
                    ]
                if response.status_code not in (429,) and response.status_code < 500:
                    raise ExtractorUnavailable(
                        f"NER service returned HTTP {response.status_code}"
                    )
                last_failure = f"HTTP {response.status_code}"
            if attempt < self.max_retries:
                self._sleep(self.backoff_base * 2**attempt)
        raise ExtractorUnavailable(f"NER service unreachable after retries: {last_failure}")


def extract_entities(raw: RawInput, extractor: EntityExtractor) -> list[Concept]:
    """Extract concepts from free text, ordered by first occurrence.

    Duplicates (by normalized text) keep only the first occurrence; document
    offsets are discarded once ordering is fixed.

    Raises:
        ExtractorUnavailable: the external backend stayed unreachable.
    """
    if raw.mode is not InputMode.UNSTRUCTURED:
        raise ValueError(f"expected unstructured input, got {raw.mode.value}")
    spans = sorted(extractor.spans(raw.payload), key=lambda s: (s.start, s.end))
    concepts: list[Concept] = []
    seen: set[str] = set()
    for span in spans:
        norm = normalize(span.text)
        if not norm or norm in seen:
            continue
        seen.add(norm)
        concepts.append(Concept(span.text, ConceptSource.EXTRACTED))
    return concepts
