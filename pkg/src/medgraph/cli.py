"""Command-line pipeline: extract, enrich, build, complete, and eval
subcommands with file/flag configuration."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .completion import (
    CompletionConfig,
    CompletionMode,
    EmbeddingProvider,
    FileEmbeddingProvider,
    HttpEmbeddingProvider,
    complete_cluster_based,
    complete_node_based,
)
from .enrichment import (
    API_KEY_ENV_VAR,
    ConceptCluster,
    OntologyClient,
    OntologyClientConfig,
    enrich_concepts,
)
from .errors import (
    ApiAuthError,
    ApiUnavailable,
    ConfigError,
    ExtractorUnavailable,
    MedGraphError,
    ParseError,
    ProviderError,
    SinkError,
)
from .evaluation import evaluate, format_table, load_pairs, report_dict
from .filtration import FilterConfig, RejectionLog, filter_concepts
from .graph import KnowledgeGraph, build_graph, emit_cypher
from .ingest import (
    GazetteerExtractor,
    NerServiceExtractor,
    RawInput,
    extract_entities,
    parse_structured,
)

logger = logging.getLogger(__name__)

_DEFAULTS: dict[str, object] = {
    "input": None,
    "format": "structured",
    "gazetteer": None,
    "ner_url": None,
    "enrich": True,
    "ontology_url": "https://data.bioontology.org",
    "api_key": None,
    "cache_dir": None,
    "page_limit": 50,
    "fuzzy_threshold": 0.90,
    "english_letter_ratio": 0.70,
    "include": (),
    "exclude": (),
    "complete": "both",
    "threshold": 4.0,
    "cluster_threshold": None,
    "node_threshold": None,
    "chunk_size": 128,
    "embeddings": None,
    "embed_url": None,
    "concepts": None,
    "out": None,
    "pairs": None,
    "metrics_out": None,
    "rejects": None,
}

_PATH_FIELDS = (
    "input",
    "gazetteer",
    "cache_dir",
    "embeddings",
    "concepts",
    "out",
    "pairs",
    "metrics_out",
    "rejects",
)
_MUST_EXIST = ("input", "gazetteer", "embeddings", "concepts", "pairs")


@dataclass
class PipelineConfig:
    """Fully resolved settings: defaults, then config file, then flags."""

    input: Path | None
    format: str
    gazetteer: Path | None
    ner_url: str | None
    enrich: bool
    ontology_url: str
    api_key: str | None
    cache_dir: Path | None
    page_limit: int
    fuzzy_threshold: float
    english_letter_ratio: float
    include: tuple[str, ...]
    exclude: tuple[str, ...]
    complete: str
    threshold: float
    cluster_threshold: float | None
    node_threshold: float | None
    chunk_size: int
    embeddings: Path | None
    embed_url: str | None
    concepts: Path | None
    out: Path | None
    pairs: Path | None
    metrics_out: Path | None
    rejects: Path | None

    def __post_init__(self) -> None:
        if self.format not in ("structured", "unstructured"):
            raise ConfigError(f"format must be structured or unstructured, got {self.format!r}")
        if self.complete not in ("cluster", "node", "both", "off"):
            raise ConfigError(
                f"complete must be cluster, node, both, or off, got {self.complete!r}"
            )
        if not self.threshold >= 0:
            raise ConfigError(f"threshold must be >= 0, got {self.threshold}")
        if self.chunk_size < 1:
            raise ConfigError(f"chunk-size must be >= 1, got {self.chunk_size}")
        if self.embeddings is not None and self.embed_url is not None:
            raise ConfigError("--embeddings and --embed-url are mutually exclusive")
        self.include = tuple(self.include)
        self.exclude = tuple(self.exclude)
        for name in _PATH_FIELDS:
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        for name in _MUST_EXIST:
            value = getattr(self, name)
            if value is not None and not value.exists():
                raise ConfigError(f"--{name.replace('_', '-')} path does not exist: {value}")

    def resolved_api_key(self) -> str | None:
        return self.api_key or os.environ.get(API_KEY_ENV_VAR)


def resolve_config(args: argparse.Namespace) -> PipelineConfig:
    values = dict(_DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(_DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        values.update(data)
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        return PipelineConfig(**values)  # type: ignore[arg-type]
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1: code 2 is reserved for auth failures
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file; flags override it")
    common.add_argument("--input", type=Path, help="input term list or document")
    common.add_argument("--format", choices=["structured", "unstructured"])
    common.add_argument("--gazetteer", type=Path, help="term list for the offline extractor")
    common.add_argument("--ner-url", help="external NER service base URL")
    common.add_argument(
        "--enrich",
        action=argparse.BooleanOptionalAction,
        help="query the ontology API (default on for build)",
    )
    common.add_argument("--ontology-url", help="ontology API base URL")
    common.add_argument("--cache-dir", type=Path, help="per-term enrichment cache directory")
    common.add_argument("--fuzzy-threshold", type=float)
    common.add_argument("--complete", choices=["cluster", "node", "both", "off"])
    common.add_argument("--threshold", type=float, help="embedding distance threshold")
    common.add_argument("--cluster-threshold", type=float, help="override for cluster mode")
    common.add_argument("--node-threshold", type=float, help="override for node mode")
    common.add_argument("--chunk-size", type=int)
    common.add_argument("--embeddings", type=Path, help="JSONL embedding file")
    common.add_argument("--embed-url", help="embedding service base URL")
    common.add_argument("--concepts", type=Path, help="concepts JSON artifact from a prior stage")
    common.add_argument("--out", type=Path, help="output path for this stage")
    common.add_argument("--pairs", type=Path, help="annotated pairs CSV")
    common.add_argument("--metrics-out", type=Path, help="metrics JSON output path")
    common.add_argument("--rejects", type=Path, help="rejection log (JSON Lines) output path")

    parser = _Parser(prog="medgraph", description="Medical knowledge graph pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="ingest and filter concepts")
    sub.add_parser("enrich", parents=[common], help="attach ontology synonyms and definitions")
    sub.add_parser("build", parents=[common], help="run the full pipeline to a Cypher script")
    sub.add_parser("complete", parents=[common], help="add embedding edges to built concepts")
    sub.add_parser("eval", parents=[common], help="score predictions against annotated pairs")
    return parser


# ---------------------------------------------------------------------------
# shared stage helpers


def _filters(cfg: PipelineConfig) -> FilterConfig:
    return FilterConfig(
        fuzzy_threshold=cfg.fuzzy_threshold,
        include_list=cfg.include,
        exclude_list=cfg.exclude,
        english_letter_ratio=cfg.english_letter_ratio,
    )


def _ingest_and_filter(cfg: PipelineConfig, log: RejectionLog) -> list[ConceptCluster]:
    if cfg.input is None:
        raise ConfigError("an --input file is required when no --concepts artifact is given")
    text = cfg.input.read_text(encoding="utf-8")
    if cfg.format == "structured":
        concepts = parse_structured(RawInput.structured(text.splitlines()))
    else:
        if cfg.gazetteer is not None:
            extractor = GazetteerExtractor.from_file(cfg.gazetteer)
        elif cfg.ner_url:
            extractor = NerServiceExtractor(cfg.ner_url)
        else:
            raise ConfigError("unstructured input needs --gazetteer or --ner-url")
        concepts = extract_entities(RawInput.unstructured(text), extractor)
    concepts = filter_concepts(concepts, _filters(cfg), log)
    return [ConceptCluster(concept=concept) for concept in concepts]


def _enrich(
    cfg: PipelineConfig, clusters: list[ConceptCluster], log: RejectionLog
) -> list[ConceptCluster]:
    client = OntologyClient(
        OntologyClientConfig(
            base_url=cfg.ontology_url,
            api_key=cfg.resolved_api_key(),
            page_limit=cfg.page_limit,
            cache_dir=cfg.cache_dir,
        )
    )
    return enrich_concepts([cluster.concept for cluster in clusters], client, _filters(cfg), log)


def _load_clusters(path: Path) -> list[ConceptCluster]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError("expected a JSON list of clusters")
        return [ConceptCluster.from_dict(item) for item in data]
    except (json.JSONDecodeError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"malformed concepts artifact {path}: {exc}") from exc


def _write_clusters(path: Path, clusters: list[ConceptCluster]) -> None:
    payload = json.dumps(
        [cluster.to_dict() for cluster in clusters], indent=2, ensure_ascii=False
    )
    path.write_text(payload + "\n", encoding="utf-8")


def _provider(cfg: PipelineConfig) -> EmbeddingProvider:
    if cfg.embeddings is not None:
        return FileEmbeddingProvider.from_jsonl(cfg.embeddings)
    if cfg.embed_url:
        return HttpEmbeddingProvider(cfg.embed_url)
    raise ConfigError("completion needs --embeddings or --embed-url")


def _run_completion(
    cfg: PipelineConfig, graph: KnowledgeGraph, clusters: list[ConceptCluster]
) -> KnowledgeGraph:
    if cfg.complete == "off":
        return graph
    provider = _provider(cfg)
    if cfg.complete in ("cluster", "both"):
        threshold = (
            cfg.cluster_threshold if cfg.cluster_threshold is not None else cfg.threshold
        )
        pass_cfg = CompletionConfig(CompletionMode.CLUSTER, threshold, cfg.chunk_size)
        graph = complete_cluster_based(graph, clusters, provider, pass_cfg)
    if cfg.complete in ("node", "both"):
        threshold = cfg.node_threshold if cfg.node_threshold is not None else cfg.threshold
        pass_cfg = CompletionConfig(CompletionMode.NODE, threshold, cfg.chunk_size)
        graph = complete_node_based(graph, provider, pass_cfg)
    return graph


def _emit(graph: KnowledgeGraph, out: Path | None) -> None:
    if out is None:
        raise ConfigError("--out is required")
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        written = emit_cypher(graph, handle)
    print(f"wrote {len(graph.nodes)} nodes, {len(graph.edges)} edges, {written} bytes to {out}")


def _write_rejects(cfg: PipelineConfig, log: RejectionLog) -> None:
    if cfg.rejects is not None:
        log.write_jsonl(cfg.rejects)


def _mode(cfg: PipelineConfig) -> CompletionMode:
    if cfg.complete == "off":
        raise ConfigError("this command needs --complete cluster, node, or both")
    return CompletionMode(cfg.complete)


# ---------------------------------------------------------------------------
# subcommands


def cmd_extract(cfg: PipelineConfig) -> int:
    log = RejectionLog()
    clusters = _ingest_and_filter(cfg, log)
    if cfg.out is None:
        raise ConfigError("--out is required")
    _write_clusters(cfg.out, clusters)
    _write_rejects(cfg, log)
    print(f"wrote {len(clusters)} concepts to {cfg.out}")
    return 0


def cmd_enrich(cfg: PipelineConfig) -> int:
    log = RejectionLog()
    if cfg.concepts is not None:
        clusters = _load_clusters(cfg.concepts)
    else:
        clusters = _ingest_and_filter(cfg, log)
    clusters = _enrich(cfg, clusters, log)
    if cfg.out is None:
        raise ConfigError("--out is required")
    _write_clusters(cfg.out, clusters)
    _write_rejects(cfg, log)
    print(f"enriched {len(clusters)} concepts to {cfg.out}")
    return 0


def cmd_build(cfg: PipelineConfig) -> int:
    log = RejectionLog()
    if cfg.concepts is not None:
        clusters = _load_clusters(cfg.concepts)
    else:
        clusters = _ingest_and_filter(cfg, log)
        if cfg.enrich:
            clusters = _enrich(cfg, clusters, log)
    graph = build_graph(clusters)
    graph = _run_completion(cfg, graph, clusters)
    _emit(graph, cfg.out)
    _write_rejects(cfg, log)
    return 0


def cmd_complete(cfg: PipelineConfig) -> int:
    if cfg.concepts is None:
        raise ConfigError("--concepts artifact is required")
    clusters = _load_clusters(cfg.concepts)
    _mode(cfg)
    graph = build_graph(clusters)
    graph = _run_completion(cfg, graph, clusters)
    _emit(graph, cfg.out)
    return 0


def cmd_eval(cfg: PipelineConfig) -> int:
    if cfg.concepts is None:
        raise ConfigError("--concepts artifact is required")
    if cfg.pairs is None:
        raise ConfigError("--pairs CSV is required")
    clusters = _load_clusters(cfg.concepts)
    mode = _mode(cfg)
    pairs = load_pairs(cfg.pairs)
    graph = build_graph(clusters)
    graph = _run_completion(cfg, graph, clusters)
    counts, report = evaluate(graph, pairs, mode)
    print(format_table(counts, report))
    if cfg.metrics_out is not None:
        payload = json.dumps(report_dict(counts, report), indent=2)
        cfg.metrics_out.write_text(payload + "\n", encoding="utf-8")
    return 0


_COMMANDS = {
    "extract": cmd_extract,
    "enrich": cmd_enrich,
    "build": cmd_build,
    "complete": cmd_complete,
    "eval": cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except ApiAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        SinkError,
        ExtractorUnavailable,
        ApiUnavailable,
        ProviderError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (MedGraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
