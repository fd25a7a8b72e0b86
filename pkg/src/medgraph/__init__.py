"""Medical knowledge graph pipeline: concept ingestion, filtration, ontology
enrichment, Cypher emission, embedding-based completion, and evaluation."""

from __future__ import annotations

from .completion import (
    CompletionConfig,
    CompletionMode,
    EmbeddingProvider,
    FileEmbeddingProvider,
    HttpEmbeddingProvider,
    chunk_text,
    cluster_embedding,
    cluster_text,
    complete,
    complete_cluster_based,
    complete_node_based,
    distance,
)
from .enrichment import (
    ConceptCluster,
    OntologyClient,
    OntologyClientConfig,
    enrich_concept,
    enrich_concepts,
)
from .errors import (
    ApiAuthError,
    ApiUnavailable,
    ConfigError,
    DimensionMismatch,
    DuplicateConcept,
    DuplicatePair,
    EmptyInput,
    ExtractorUnavailable,
    MedGraphError,
    ParseError,
    ProviderError,
    SinkError,
    UnknownConcept,
    UnsanitizableText,
)
from .evaluation import (
    AnnotatedPair,
    ConfusionCounts,
    MetricReport,
    PairLabel,
    evaluate,
    load_pairs,
    predict_pair,
    score,
)
from .filtration import (
    EnglishStopwordDetector,
    FilterConfig,
    RejectionLog,
    dedup_exact,
    filter_concepts,
    filter_non_english,
    fuzzy_dedup,
    levenshtein,
    similarity,
)
from .graph import (
    GraphEdge,
    GraphNode,
    KnowledgeGraph,
    NodeKind,
    RelKind,
    build_graph,
    emit_cypher,
    make_node_id,
)
from .ingest import (
    Concept,
    ConceptSource,
    GazetteerExtractor,
    InputMode,
    NerServiceExtractor,
    RawInput,
    extract_entities,
    normalize,
    parse_structured,
)

__version__ = "0.1.0"

__all__ = [
    "AnnotatedPair",
    "ApiAuthError",
    "ApiUnavailable",
    "CompletionConfig",
    "CompletionMode",
    "Concept",
    "ConceptCluster",
    "ConceptSource",
    "ConfigError",
    "ConfusionCounts",
    "DimensionMismatch",
    "DuplicateConcept",
    "DuplicatePair",
    "EmbeddingProvider",
    "EmptyInput",
    "EnglishStopwordDetector",
    "ExtractorUnavailable",
    "FileEmbeddingProvider",
    "FilterConfig",
    "GazetteerExtractor",
    "GraphEdge",
    "GraphNode",
    "HttpEmbeddingProvider",
    "InputMode",
    "KnowledgeGraph",
    "MedGraphError",
    "MetricReport",
    "NerServiceExtractor",
    "NodeKind",
    "OntologyClient",
    "OntologyClientConfig",
    "PairLabel",
    "ParseError",
    "ProviderError",
    "RawInput",
    "RejectionLog",
    "RelKind",
    "SinkError",
    "UnknownConcept",
    "UnsanitizableText",
    "build_graph",
    "chunk_text",
    "cluster_embedding",
    "cluster_text",
    "complete",
    "complete_cluster_based",
    "complete_node_based",
    "dedup_exact",
    "distance",
    "emit_cypher",
    "enrich_concept",
    "enrich_concepts",
    "evaluate",
    "extract_entities",
    "filter_concepts",
    "filter_non_english",
    "fuzzy_dedup",
    "levenshtein",
    "load_pairs",
    "make_node_id",
    "normalize",
    "parse_structured",
    "predict_pair",
    "score",
    "similarity",
]
