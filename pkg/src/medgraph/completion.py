"""Embedding-based graph completion: link clusters (mean-pooled chunk
vectors) or individual nodes (pairwise texts) when their L2 distance falls
under a threshold."""

from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

import numpy as np
import requests

from .enrichment import ConceptCluster
from .errors import DimensionMismatch, ProviderError, UnsanitizableText
from .graph import GraphEdge, KnowledgeGraph, RelKind, make_node_id
from .ingest import normalize

logger = logging.getLogger(__name__)


class CompletionMode(str, Enum):
    CLUSTER = "cluster"
    NODE = "node"
    BOTH = "both"


@dataclass
class CompletionConfig:
    mode: CompletionMode = CompletionMode.BOTH
    threshold: float = 4.0
    chunk_size: int = 128

    def __post_init__(self) -> None:
        self.mode = CompletionMode(self.mode)
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")


class EmbeddingProvider(Protocol):
    """Deterministic text-to-vector source with a fixed dimension."""

    @property
    def dimension(self) -> int: ...

    def embed(self, text: str) -> np.ndarray: ...


def _as_vector(values: object, context: str) -> np.ndarray:
    vector = np.asarray(values, dtype=float)
    if vector.ndim != 1 or vector.size == 0:
        raise ProviderError(f"{context}: expected a non-empty 1-D vector")
    if not np.all(np.isfinite(vector)):
        raise ProviderError(f"{context}: vector contains non-finite values")
    return vector


class FileEmbeddingProvider:
    """Vectors preloaded from a JSON Lines file, keyed by normalized text."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        if not vectors:
            raise ProviderError("embedding file holds no vectors")
        dimensions = {vector.shape[0] for vector in vectors.values()}
        if len(dimensions) != 1:
            raise ProviderError(f"mixed vector dimensions in embedding file: {sorted(dimensions)}")
        self._vectors = vectors
        self._dimension = dimensions.pop()

    @classmethod
    def from_jsonl(cls, path: str | Path) -> FileEmbeddingProvider:
        vectors: dict[str, np.ndarray] = {}
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    key = normalize(record["text"])
                    vector = _as_vector(record["vector"], f"{path}:{lineno}")
                except (json.JSONDecodeError, KeyError, TypeError, AttributeError) as exc:
                    raise ProviderError(
                        f"{path}:{lineno}: malformed embedding record: {exc}"
                    ) from None
                if key in vectors:
                    raise ProviderError(f"{path}:{lineno}: duplicate embedding for {key!r}")
                vectors[key] = vector
        return cls(vectors)

    @property
    def dimension(self) -> int:
        return self._dimension

    def embed(self, text: str) -> np.ndarray:
        key = normalize(text)
        try:
            return self._vectors[key]
        except KeyError:
            raise ProviderError(f"no embedding on file for {key!r}") from None


class HttpEmbeddingProvider:
    """Client for a POST /embed service; retries transient failures and
    memoizes per-text results so repeated lookups stay identical."""

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 10.0,
        max_retries: int = 3,
        backoff_base: float = 0.5,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self._session = session or requests.Session()
        self._sleep = sleep
        self._cache: dict[str, np.ndarray] = {}
        self._dimension: int | None = None

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            raise ProviderError("embedding dimension unknown before the first request")
        return self._dimension

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]

    def embed_many(self, texts: list[str]) -> list[np.ndarray]:
        missing = [text for text in texts if text not in self._cache]
        if missing:
            vectors = self._post_embed(missing)
            for text, vector in zip(missing, vectors):
                self._cache.setdefault(text, vector)
        return [self._cache[text] for text in texts]

    def _post_embed(self, texts: list[str]) -> list[np.ndarray]:
        url = self.base_url + "/embed"
        last_error = "no attempts made"
        for attempt in range(self.max_retries + 1):
            if attempt > 0:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                response = self._session.post(url, json={"texts": texts}, timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code >= 400:
                raise ProviderError(f"embedding service refused the request: "
                                    f"HTTP {response.status_code}")
            return self._parse_response(response.json(), len(texts))
        raise ProviderError(
            f"embedding service unreachable after {self.max_retries + 1} attempts: {last_error}"
        )

    def _parse_response(self, payload: dict, expected: int) -> list[np.ndarray]:
        vectors = payload.get("vectors")
        dimension = payload.get("dimension")
        if not isinstance(vectors, list) or len(vectors) != expected:
            raise ProviderError(
                f"embedding service returned {len(vectors) if isinstance(vectors, list) else 0} "
                f"vectors for {expected} texts"
            )
        parsed = [_as_vector(vector, "embedding response") for vector in vectors]
        for vector in parsed:
            if vector.shape[0] != dimension:
                raise ProviderError(
                    f"vector length {vector.shape[0]} disagrees with declared "
                    f"dimension {dimension}"
                )
        if self._dimension is None:
            self._dimension = int(dimension)
        elif self._dimension != dimension:
            raise ProviderError(
                f"embedding dimension changed from {self._dimension} to {dimension}"
            )
        return parsed


def chunk_text(text: str, chunk_size: int) -> list[str]:
    """Split into consecutive whitespace-token chunks of at most chunk_size
    tokens each."""
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    tokens = text.split()
    return [
        " ".join(tokens[start : start + chunk_size])
        for start in range(0, len(tokens), chunk_size)
    ]


def cluster_text(cluster: ConceptCluster) -> str:
    """Concept text, then synonyms, then definitions, space-joined in order."""
    return " ".join([cluster.concept.normalized_text, *cluster.synonyms, *cluster.definitions])


def cluster_embedding(
    cluster: ConceptCluster, provider: EmbeddingProvider, chunk_size: int
) -> np.ndarray:
    """Mean of the chunk vectors, unweighted by chunk length."""
    chunks = chunk_text(cluster_text(cluster), chunk_size)
    if not chunks:
        raise ProviderError(
            f"cluster {cluster.concept.normalized_text!r} has no text to embed"
        )
    vectors = [_as_vector(provider.embed(chunk), "provider output") for chunk in chunks]
    lengths = {vector.shape[0] for vector in vectors}
    if len(lengths) != 1:
        raise DimensionMismatch(f"chunk vectors disagree on dimension: {sorted(lengths)}")
    return np.sum(vectors, axis=0) / len(vectors)


def distance(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean (L2) distance."""
    va = np.asarray(a, dtype=float)
    vb = np.asarray(b, dtype=float)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"cannot compare shapes {va.shape} and {vb.shape}")
    return float(np.linalg.norm(va - vb))


def complete_cluster_based(
    graph: KnowledgeGraph,
    clusters: list[ConceptCluster],
    provider: EmbeddingProvider,
    cfg: CompletionConfig,
) -> KnowledgeGraph:
    """Link concept pairs whose cluster embeddings sit within the threshold.

    Returns a new graph; the input graph is untouched. Clusters whose
    embedding fails are skipped with a warning.
    """
    result = graph.copy()
    embeddings: dict[str, np.ndarray] = {}
    for cluster in clusters:
        try:
            concept_id = make_node_id(cluster.concept.normalized_text)
        except UnsanitizableText:
            continue
        if concept_id not in result.nodes:
            continue
        try:
            embeddings[concept_id] = cluster_embedding(cluster, provider, cfg.chunk_size)
        except ProviderError as exc:
            logger.warning("skipping cluster %r: %s", cluster.concept.normalized_text, exc)
    for id_a, id_b in itertools.combinations(sorted(embeddings), 2):
        d = distance(embeddings[id_a], embeddings[id_b])
        if d <= cfg.threshold:
            result.add_edge(GraphEdge(id_a, id_b, RelKind.EMBEDDING_MATCH_CLUSTER, d))
    return result


def complete_node_based(
    graph: KnowledgeGraph,
    provider: EmbeddingProvider,
    cfg: CompletionConfig,
) -> KnowledgeGraph:
    """Link node pairs from different clusters whose text embeddings sit
    within the threshold. Node texts embed as a single chunk.

    Returns a new graph; nodes whose embedding fails are skipped with a
    warning. Intra-cluster pairs are never considered.
    """
    result = graph.copy()
    embeddings: dict[str, np.ndarray] = {}
    for node_id in sorted(result.nodes):
        node = result.nodes[node_id]
        try:
            embeddings[node_id] = _as_vector(
                provider.embed(normalize(node.display_text)), "provider output"
            )
        except ProviderError as exc:
            logger.warning("skipping node %r: %s", node_id, exc)
    for id_a, id_b in itertools.combinations(sorted(embeddings), 2):
        if result.cluster_of[id_a] == result.cluster_of[id_b]:
            continue
        d = distance(embeddings[id_a], embeddings[id_b])
        if d <= cfg.threshold:
            result.add_edge(GraphEdge(id_a, id_b, RelKind.EMBEDDING_MATCH_NODE, d))
    return result


def complete(
    graph: KnowledgeGraph,
    clusters: list[ConceptCluster],
    provider: EmbeddingProvider,
    cfg: CompletionConfig,
) -> KnowledgeGraph:
    """Run the configured completion mode(s) and return the augmented graph."""
    result = graph
    if cfg.mode in (CompletionMode.CLUSTER, CompletionMode.BOTH):
        result = complete_cluster_based(result, clusters, provider, cfg)
    if cfg.mode in (CompletionMode.NODE, CompletionMode.BOTH):
        result = complete_node_based(result, provider, cfg)
    return result
