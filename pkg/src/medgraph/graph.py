"""Typed knowledge graph built from concept clusters, plus deterministic
Cypher script emission."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import TextIO

from .enrichment import ConceptCluster
from .errors import DuplicateConcept, SinkError, UnsanitizableText

logger = logging.getLogger(__name__)

_STRIP_RE = re.compile(r"[^a-z0-9]+")
_NEWLINE_RE = re.compile(r"\r\n|\r|\n")


class NodeKind(str, Enum):
    CONCEPT = "Concept"
    SYNONYM = "Synonym"
    DEFINITION = "Definition"


class RelKind(str, Enum):
    HAS_SYNONYM = "HAS_SYNONYM"
    HAS_DEFINITION = "HAS_DEFINITION"
    EMBEDDING_MATCH_CLUSTER = "embedding_match_cluster"
    EMBEDDING_MATCH_NODE = "embedding_match_node"


def make_node_id(text: str) -> str:
    """Content-addressed node id: lowercase, keep only [a-z0-9], prefix 'n'
    when the result leads with a digit.

    Distinct texts with equal sanitized forms intentionally share one id.
    """
    stripped = _STRIP_RE.sub("", text.lower())
    if not stripped:
        raise UnsanitizableText(f"no [a-z0-9] characters survive sanitization: {text!r}")
    if stripped[0].isdigit():
        stripped = "n" + stripped
    return stripped


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: NodeKind
    display_text: str

    def __post_init__(self) -> None:
        if self.id != make_node_id(self.display_text):
            raise ValueError(
                f"node id {self.id!r} does not match sanitized display text "
                f"{self.display_text!r}"
            )


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    rel: RelKind
    distance: float | None = None

    def __post_init__(self) -> None:
        if self.src == self.dst:
            raise ValueError(f"self-loop edge on {self.src!r}")
        if self.rel in (RelKind.HAS_SYNONYM, RelKind.HAS_DEFINITION):
            if self.distance is not None:
                raise ValueError(f"{self.rel.value} edges carry no distance")
        else:
            if self.distance is None or not math.isfinite(self.distance) or self.distance < 0:
                raise ValueError(
                    f"{self.rel.value} edges need a finite nonnegative distance, "
                    f"got {self.distance!r}"
                )

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.rel.value)


@dataclass
class KnowledgeGraph:
    """Nodes keyed by id, insertion-ordered unique edges, and a total map
    from every node to its owning concept (cluster) node.

    Treated as immutable once built; completion passes construct a copy.
    """

    nodes: dict[str, GraphNode] = field(default_factory=dict)
    edges: list[GraphEdge] = field(default_factory=list)
    cluster_of: dict[str, str] = field(default_factory=dict)

    def add_node(self, node: GraphNode, cluster_id: str) -> GraphNode:
        """Insert a node, or return the existing one for a shared id (first
        registration keeps its kind and cluster)."""
        existing = self.nodes.get(node.id)
        if existing is not None:
            return existing
        self.nodes[node.id] = node
        self.cluster_of[node.id] = cluster_id
        return node

    def add_edge(self, edge: GraphEdge) -> bool:
        """Append edge unless an equal (src, dst, rel) is already present.
        Returns True when the edge was added."""
        if edge.src not in self.nodes or edge.dst not in self.nodes:
            raise ValueError(f"edge endpoint missing from graph: {edge.src!r} -> {edge.dst!r}")
        if any(edge.key == other.key for other in self.edges):
            return False
        self.edges.append(edge)
        return True

    def copy(self) -> KnowledgeGraph:
        return KnowledgeGraph(dict(self.nodes), list(self.edges), dict(self.cluster_of))

    def cluster_members(self, concept_id: str) -> frozenset[str]:
        return frozenset(
            node_id for node_id, owner in self.cluster_of.items() if owner == concept_id
        )

    def concept_ids(self) -> list[str]:
        return [
            node_id for node_id, node in self.nodes.items() if node.kind == NodeKind.CONCEPT
        ]


def build_graph(clusters: list[ConceptCluster]) -> KnowledgeGraph:
    """One Concept node per cluster plus Synonym/Definition nodes wired with
    HAS_* edges.

    Items across clusters that sanitize to one id share a single node (the
    first cluster owns it); items whose text sanitizes to nothing are dropped
    with a warning.
    """
    graph = KnowledgeGraph()
    concept_ids: list[str] = []
    for cluster in clusters:
        try:
            concept_id = make_node_id(cluster.concept.normalized_text)
        except UnsanitizableText:
            logger.warning(
                "dropping cluster with unsanitizable concept %r",
                cluster.concept.raw_text,
            )
            concept_ids.append("")
            continue
        if concept_id in graph.nodes:
            raise DuplicateConcept(
                f"concepts {graph.nodes[concept_id].display_text!r} and "
                f"{cluster.concept.normalized_text!r} share node id {concept_id!r}"
            )
        graph.add_node(
            GraphNode(concept_id, NodeKind.CONCEPT, cluster.concept.normalized_text),
            concept_id,
        )
        concept_ids.append(concept_id)

    for cluster, concept_id in zip(clusters, concept_ids):
        if not concept_id:
            continue
        for kind, rel, items in (
            (NodeKind.SYNONYM, RelKind.HAS_SYNONYM, cluster.synonyms),
            (NodeKind.DEFINITION, RelKind.HAS_DEFINITION, cluster.definitions),
        ):
            for item in items:
                try:
                    item_id = make_node_id(item)
                except UnsanitizableText:
                    logger.warning("dropping unsanitizable %s %r", kind.value.lower(), item)
                    continue
                if item_id == concept_id:
                    # sanitized self-reference; a self-loop is never stored
                    continue
                graph.add_node(GraphNode(item_id, kind, item), concept_id)
                graph.add_edge(GraphEdge(concept_id, item_id, rel))
    return graph


def escape_cypher(text: str) -> str:
    """Escape for a double-quoted Cypher string literal. Newlines collapse to
    one space before escaping so statements stay one per line."""
    flattened = _NEWLINE_RE.sub(" ", text)
    return flattened.replace("\\", "\\\\").replace('"', '\\"')


def cypher_lines(graph: KnowledgeGraph) -> list[str]:
    """Render the graph as sorted Cypher statements, one per line, without
    trailing newlines. Equal graphs produce identical lines."""
    lines: list[str] = []
    for node in sorted(graph.nodes.values(), key=lambda n: (n.kind.value, n.id)):
        lines.append(
            f'MERGE (:{node.kind.value} {{id: "{node.id}", '
            f'name: "{escape_cypher(node.display_text)}"}});'
        )
    for edge in sorted(graph.edges, key=lambda e: (e.rel.value, e.src, e.dst)):
        props = f" {{distance: {edge.distance:.6f}}}" if edge.distance is not None else ""
        lines.append(
            f'MATCH (a {{id: "{edge.src}"}}), (b {{id: "{edge.dst}"}}) '
            f"MERGE (a)-[:{edge.rel.value}{props}]->(b);"
        )
    return lines


def emit_cypher(graph: KnowledgeGraph, out: TextIO) -> int:
    """Write the Cypher script to a text sink; returns UTF-8 bytes written."""
    total = 0
    for line in cypher_lines(graph):
        payload = line + "\n"
        try:
            out.write(payload)
        except OSError as exc:
            raise SinkError(f"failed writing Cypher output: {exc}") from exc
        total += len(payload.encode("utf-8"))
    return total
