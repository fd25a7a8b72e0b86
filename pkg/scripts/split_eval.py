#!/usr/bin/env python3
"""Two-arm evaluation harness.

Partitions the input concepts into two equal halves with a seeded shuffle,
then scores each comparison method on its own half: the first half gets
cluster-level completion, the second node-level, both at the same distance
threshold. Annotated pairs are assigned to whichever half contains both of
their concepts; pairs straddling the halves are reported and skipped.

This mirrors a two-arm expert-annotation study design as a reproducible
script over fixture data. Run it against the bundled fixtures:

    python3 scripts/split_eval.py \
        --input tests/fixtures/terms.txt \
        --pairs tests/fixtures/pairs.csv \
        --cache-dir tests/fixtures/ontology_cache \
        --embeddings tests/fixtures/embeddings.jsonl

The ontology cache ships warm, so no API key or network is needed.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from medgraph.completion import (
    CompletionConfig,
    CompletionMode,
    FileEmbeddingProvider,
    complete,
)
from medgraph.enrichment import OntologyClient, OntologyClientConfig, enrich_concepts
from medgraph.errors import MedGraphError
from medgraph.evaluation import evaluate, format_table, load_pairs
from medgraph.filtration import FilterConfig, filter_concepts
from medgraph.graph import build_graph
from medgraph.ingest import RawInput, parse_structured


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", type=Path, required=True, help="concept list, one per line")
    parser.add_argument("--pairs", type=Path, required=True, help="annotated pairs CSV")
    parser.add_argument("--cache-dir", type=Path, required=True)
    parser.add_argument("--embeddings", type=Path, required=True)
    parser.add_argument("--ontology-url", default="https://data.bioontology.org")
    parser.add_argument("--threshold", type=float, default=4.0)
    parser.add_argument("--chunk-size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0, help="shuffle seed for the split")
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    filters = FilterConfig()
    concepts = filter_concepts(
        parse_structured(
            RawInput.structured(args.input.read_text(encoding="utf-8").splitlines())
        ),
        filters,
    )
    client = OntologyClient(
        OntologyClientConfig(base_url=args.ontology_url, cache_dir=args.cache_dir)
    )
    clusters = enrich_concepts(concepts, client, filters)
    pairs = load_pairs(args.pairs)
    provider = FileEmbeddingProvider.from_jsonl(args.embeddings)

    order = list(range(len(clusters)))
    random.Random(args.seed).shuffle(order)
    cut = (len(order) + 1) // 2
    halves = [
        ("cluster-based", CompletionMode.CLUSTER, [clusters[i] for i in order[:cut]]),
        ("node-based", CompletionMode.NODE, [clusters[i] for i in order[cut:]]),
    ]

    assigned = 0
    for name, mode, half in halves:
        texts = {cluster.concept.normalized_text for cluster in half}
        half_pairs = [
            pair for pair in pairs if pair.concept_a in texts and pair.concept_b in texts
        ]
        assigned += len(half_pairs)
        print(f"== {name} arm: {len(half)} concepts, {len(half_pairs)} pairs "
              f"(threshold {args.threshold}) ==")
        if not half_pairs:
            print("no annotated pairs fall inside this half; reshuffle with --seed\n")
            continue
        graph = complete(
            build_graph(half),
            half,
            provider,
            CompletionConfig(mode, args.threshold, args.chunk_size),
        )
        counts, report = evaluate(graph, half_pairs, mode)
        print(format_table(counts, report))
        print()
    skipped = len(pairs) - assigned
    if skipped:
        print(f"{skipped} pair(s) straddle the split and were not scored")
    return 0


if __name__ == "__main__":
    try:
        sys.exit(main())
    except MedGraphError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.exit(1)
