"""Ontology REST enrichment: fetch synonyms and definitions per concept,
filter them, and cache the result on disk for replayable offline runs."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import requests

from .errors import ApiAuthError, ApiUnavailable
from .filtration import FilterConfig, RejectionLog, dedup_exact, filter_non_english, fuzzy_dedup
from .ingest import Concept, normalize

logger = logging.getLogger(__name__)

API_KEY_ENV_VAR = "ONTOLOGY_API_KEY"


@dataclass
class ConceptCluster:
    """A concept with its ontology-derived synonyms and definitions.

    Lists are filtered and deduplicated; the concept itself never appears in
    its own synonym list.
    """

    concept: Concept
    synonyms: list[str] = field(default_factory=list)
    definitions: list[str] = field(default_factory=list)
    source_ontologies: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "concept": self.concept.to_dict(),
            "synonyms": list(self.synonyms),
            "definitions": list(self.definitions),
            "source_ontologies": list(self.source_ontologies),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ConceptCluster:
        return cls(
            concept=Concept.from_dict(data["concept"]),
            synonyms=list(data.get("synonyms", [])),
            definitions=list(data.get("definitions", [])),
            source_ontologies=list(data.get("source_ontologies", [])),
        )


@dataclass(frozen=True)
class SearchRecord:
    """One parsed search result: its synonym/definition payload and the
    acronym of the ontology it came from."""

    synonyms: tuple[str, ...] = ()
    definitions: tuple[str, ...] = ()
    ontology: str | None = None


@dataclass
class OntologyClientConfig:
    base_url: str
    api_key: str | None = None
    page_limit: int = 50
    min_request_interval: float = 0.1
    max_retries: int = 3
    backoff_base: float = 0.5
    request_timeout: float = 10.0
    cache_dir: Path | None = None

    def __post_init__(self) -> None:
        if self.page_limit < 1:
            raise ValueError(f"page_limit must be >= 1, got {self.page_limit}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)


class OntologyClient:
    """Paced, retrying search client for a BioPortal-style REST API.

    Requests from concurrent callers are spaced at least
    min_request_interval apart; HTTP 429 and 5xx are retried with
    exponential backoff; 401/403 abort with an actionable auth error.
    """

    def __init__(
        self,
        config: OntologyClientConfig,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._pace_lock = threading.Lock()
        self._next_allowed = 0.0
        self._inflight = threading.BoundedSemaphore(4)

    def cache_path(self, concept: Concept) -> Path | None:
        if self.config.cache_dir is None:
            return None
        from .graph import make_node_id

        return self.config.cache_dir / f"{make_node_id(concept.normalized_text)}.json"

    def _wait_for_slot(self) -> None:
        # The lock is held through the sleep and the slot is re-anchored at
        # the actual wake time. Reserving the next slot up front would let
        # an oversleeping request compress its gap to the one after it.
        with self._pace_lock:
            delay = self._next_allowed - self._clock()
            if delay > 0:
                self._sleep(delay)
            self._next_allowed = self._clock() + self.config.min_request_interval

    def fetch_search_page(self, term: str) -> list[SearchRecord]:
        """GET the first search page for a term and parse it. Raises
        ApiAuthError on 401/403 or a missing key, ApiUnavailable otherwise."""
        if not term:
            raise ValueError("term must be non-empty")
        if not self.config.api_key:
            raise ApiAuthError(
                f"no ontology API key configured; set the {API_KEY_ENV_VAR} "
                "environment variable or the api_key config entry"
            )
        url = self.config.base_url.rstrip("/") + "/search"
        params = {"q": term, "apikey": self.config.api_key}
        with self._inflight:
            last_error: str = "no attempts made"
            for attempt in range(self.config.max_retries + 1):
                if attempt > 0:
                    self._sleep(self.config.backoff_base * (2 ** (attempt - 1)))
                self._wait_for_slot()
                try:
                    response = self._session.get(
                        url, params=params, timeout=self.config.request_timeout
                    )
                except requests.RequestException as exc:
                    last_error = str(exc)
                    continue
                if response.status_code in (401, 403):
                    raise ApiAuthError(
                        f"ontology API rejected the key (HTTP {response.status_code}); "
                        f"check the {API_KEY_ENV_VAR} environment variable"
                    )
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = f"HTTP {response.status_code}"
                    continue
                if response.status_code >= 400:
                    raise ApiUnavailable(f"search for {term!r} failed: HTTP {response.status_code}")
                return self._parse_page(response.json())
            raise ApiUnavailable(
                f"search for {term!r} failed after "
                f"{self.config.max_retries + 1} attempts: {last_error}"
            )

    def _parse_page(self, payload: dict) -> list[SearchRecord]:
        records: list[SearchRecord] = []
        collection = payload.get("collection", [])
        for entry in collection[: self.config.page_limit]:
            if not isinstance(entry, dict):
                continue
            ontology = None
            links = entry.get("links")
            if isinstance(links, dict):
                raw = links.get("ontology")
                if isinstance(raw, str) and raw:
                    ontology = raw.rstrip("/").rsplit("/", 1)[-1]
            records.append(
                SearchRecord(
                    synonyms=tuple(_string_items(entry.get("synonym"))),
                    definitions=tuple(_string_items(entry.get("definition"))),
                    ontology=ontology,
                )
            )
        return records


def _string_items(value: object) -> list[str]:
    if isinstance(value, list):
        return [item for item in value if isinstance(item, str) and item.strip()]
    return []


def _filter_items(items: list[str], filters: FilterConfig, log: RejectionLog | None) -> list[str]:
    kept = filter_non_english(items, filters, log)
    kept = dedup_exact(kept)
    return fuzzy_dedup(kept, filters.fuzzy_threshold, log)


def _read_cache(path: Path, concept: Concept) -> ConceptCluster:
    data = json.loads(path.read_text(encoding="utf-8"))
    return ConceptCluster(
        concept=concept,
        synonyms=list(data.get("synonyms", [])),
        definitions=list(data.get("definitions", [])),
        source_ontologies=list(data.get("source_ontologies", [])),
    )


def _write_cache(path: Path, cluster: ConceptCluster) -> None:
    """Byte-stable cache write: fixed key order, 2-space indent, atomic
    temp-file rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "term": cluster.concept.normalized_text,
        "synonyms": cluster.synonyms,
        "definitions": cluster.definitions,
        "source_ontologies": cluster.source_ontologies,
    }
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    fd, temp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(temp_name, path)
    except BaseException:
        try:
            os.unlink(temp_name)
        except OSError:
            pass
        raise


def enrich_concept(
    concept: Concept,
    client: OntologyClient,
    filters: FilterConfig,
    log: RejectionLog | None = None,
) -> ConceptCluster:
    """Build the concept's cluster from the first search page, filtered and
    cached.

    A warm cache answers without touching the network. When retries are
    exhausted the concept keeps an empty cluster and the run continues;
    failures are never cached.
    """
    cache = client.cache_path(concept)
    if cache is not None and cache.exists():
        return _read_cache(cache, concept)
    try:
        records = client.fetch_search_page(concept.normalized_text)
    except ApiUnavailable as exc:
        logger.warning("enrichment unavailable for %r: %s", concept.normalized_text, exc)
        return ConceptCluster(concept=concept)

    synonyms: list[str] = []
    definitions: list[str] = []
    ontologies: list[str] = []
    for record in records:
        if record.ontology and (record.synonyms or record.definitions):
            if record.ontology not in ontologies:
                ontologies.append(record.ontology)
        synonyms.extend(record.synonyms)
        definitions.extend(record.definitions)

    synonyms = _filter_items(synonyms, filters, log)
    synonyms = [s for s in synonyms if normalize(s) != concept.normalized_text]
    definitions = _filter_items(definitions, filters, log)

    cluster = ConceptCluster(
        concept=concept,
        synonyms=synonyms,
        definitions=definitions,
        source_ontologies=ontologies,
    )
    if cache is not None:
        _write_cache(cache, cluster)
    return cluster


def enrich_concepts(
    concepts: list[Concept],
    client: OntologyClient,
    filters: FilterConfig,
    log: RejectionLog | None = None,
) -> list[ConceptCluster]:
    """Enrich in input order; sequential so output ordering never depends on
    network timing."""
    return [enrich_concept(concept, client, filters, log) for concept in concepts]
