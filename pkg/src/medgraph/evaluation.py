"""Scoring of predicted links against expert-annotated concept pairs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .completion import CompletionMode
from .errors import DuplicatePair, ParseError, UnknownConcept, UnsanitizableText
from .graph import KnowledgeGraph, NodeKind, RelKind, make_node_id
from .ingest import normalize


class PairLabel(str, Enum):
    RELATED = "related"
    UNRELATED = "unrelated"


@dataclass(frozen=True)
class AnnotatedPair:
    concept_a: str
    concept_b: str
    label: PairLabel

    def __post_init__(self) -> None:
        object.__setattr__(self, "concept_a", normalize(self.concept_a))
        object.__setattr__(self, "concept_b", normalize(self.concept_b))
        object.__setattr__(self, "label", PairLabel(self.label))
        if not self.concept_a or not self.concept_b:
            raise ValueError("pair concepts must be non-empty")
        if self.concept_a == self.concept_b:
            raise ValueError(f"pair compares {self.concept_a!r} with itself")

    @property
    def unordered_key(self) -> frozenset[str]:
        return frozenset((self.concept_a, self.concept_b))


EXPECTED_HEADER = ("concept_a", "concept_b", "label")


def load_pairs(path: str | Path) -> list[AnnotatedPair]:
    """Parse the annotated-pairs CSV; raises ParseError with the offending
    line number, or DuplicatePair when an unordered pair repeats."""
    pairs: list[AnnotatedPair] = []
    seen: dict[frozenset[str], int] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected a header row", line=1) from None
        if tuple(cell.strip() for cell in header) != EXPECTED_HEADER:
            raise ParseError(
                f"expected header {','.join(EXPECTED_HEADER)!r}, got {','.join(header)!r}",
                line=1,
            )
        for lineno, row in enumerate(reader, 2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 columns, got {len(row)}", line=lineno)
            concept_a, concept_b, label = (cell.strip() for cell in row)
            if label not in (PairLabel.RELATED.value, PairLabel.UNRELATED.value):
                raise ParseError(
                    f"label must be 'related' or 'unrelated', got {label!r}", line=lineno
                )
            try:
                pair = AnnotatedPair(concept_a, concept_b, PairLabel(label))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            previous = seen.get(pair.unordered_key)
            if previous is not None:
                raise DuplicatePair(
                    f"line {lineno}: pair ({pair.concept_a!r}, {pair.concept_b!r}) "
                    f"already annotated at line {previous}"
                )
            seen[pair.unordered_key] = lineno
            pairs.append(pair)
    if not pairs:
        raise ParseError("no pairs found after the header")
    return pairs


_MODE_RELS = {
    CompletionMode.CLUSTER: frozenset({RelKind.EMBEDDING_MATCH_CLUSTER}),
    CompletionMode.NODE: frozenset({RelKind.EMBEDDING_MATCH_NODE}),
    CompletionMode.BOTH: frozenset(
        {RelKind.EMBEDDING_MATCH_CLUSTER, RelKind.EMBEDDING_MATCH_NODE}
    ),
}


def _concept_node_id(graph: KnowledgeGraph, text: str) -> str:
    try:
        node_id = make_node_id(text)
    except UnsanitizableText:
        raise UnknownConcept(f"concept {text!r} is not in the graph") from None
    node = graph.nodes.get(node_id)
    if node is None or node.kind != NodeKind.CONCEPT:
        raise UnknownConcept(f"concept {text!r} is not in the graph")
    return node_id


def predict_pair(
    graph: KnowledgeGraph, pair: AnnotatedPair, mode: CompletionMode
) -> PairLabel:
    """Related iff any embedding edge of the mode's relation joins the two
    concepts' clusters."""
    rels = _MODE_RELS[CompletionMode(mode)]
    id_a = _concept_node_id(graph, pair.concept_a)
    id_b = _concept_node_id(graph, pair.concept_b)
    members_a = graph.cluster_members(id_a)
    members_b = graph.cluster_members(id_b)
    for edge in graph.edges:
        if edge.rel not in rels:
            continue
        if (edge.src in members_a and edge.dst in members_b) or (
            edge.src in members_b and edge.dst in members_a
        ):
            return PairLabel.RELATED
    return PairLabel.UNRELATED


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class MetricReport:
    """Derived scores; a metric whose denominator is zero is None, never 0."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None

    @classmethod
    def from_counts(cls, counts: ConfusionCounts) -> MetricReport:
        accuracy = (counts.tp + counts.tn) / counts.total if counts.total else None
        precision = (
            counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
        )
        recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
        if precision is not None and recall is not None and precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = None
        return cls(accuracy, precision, recall, f1)


def score(
    pairs: list[AnnotatedPair], predictions: list[PairLabel]
) -> tuple[ConfusionCounts, MetricReport]:
    """Tally the confusion counts and derive metrics; every pair lands in
    exactly one of tp/fp/tn/fn."""
    if len(pairs) != len(predictions):
        raise ValueError(
            f"{len(pairs)} pairs but {len(predictions)} predictions"
        )
    tp = fp = tn = fn = 0
    for pair, predicted in zip(pairs, predictions):
        actual_related = pair.label == PairLabel.RELATED
        predicted_related = PairLabel(predicted) == PairLabel.RELATED
        if actual_related and predicted_related:
            tp += 1
        elif not actual_related and predicted_related:
            fp += 1
        elif not actual_related and not predicted_related:
            tn += 1
        else:
            fn += 1
    counts = ConfusionCounts(tp, fp, tn, fn)
    return counts, MetricReport.from_counts(counts)


def evaluate(
    graph: KnowledgeGraph, pairs: list[AnnotatedPair], mode: CompletionMode
) -> tuple[ConfusionCounts, MetricReport]:
    predictions = [predict_pair(graph, pair, mode) for pair in pairs]
    return score(pairs, predictions)


def report_dict(counts: ConfusionCounts, report: MetricReport) -> dict:
    """JSON-ready report; undefined metrics serialize as null."""
    return {
        "tp": counts.tp,
        "fp": counts.fp,
        "tn": counts.tn,
        "fn": counts.fn,
        "accuracy": report.accuracy,
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
    }


def format_table(counts: ConfusionCounts, report: MetricReport) -> str:
    """Small fixed-width table for terminal output."""
    def fmt(value: float | None) -> str:
        return "undefined" if value is None else f"{value:.4f}"

    rows = [
        ("tp", str(counts.tp)),
        ("fp", str(counts.fp)),
        ("tn", str(counts.tn)),
        ("fn", str(counts.fn)),
        ("accuracy", fmt(report.accuracy)),
        ("precision", fmt(report.precision)),
        ("recall", fmt(report.recall)),
        ("f1", fmt(report.f1)),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows)
