#!/usr/bin/env python3
"""Regenerate the derived test fixtures from the authored ones.

Authored inputs (edited by hand):
    tests/fixtures/terms.txt
    tests/fixtures/ontology_server/*.json
    tests/fixtures/embeddings.jsonl
    tests/fixtures/pairs.csv
    tests/fixtures/expected.cypher   (hand-derived golden)

Derived outputs (written here):
    tests/fixtures/ontology_cache/*.json

The script then rebuilds the Cypher script from the refreshed cache and
compares it byte-for-byte against the pinned golden file, failing loudly on
any drift so the golden is never overwritten silently.
"""

from __future__ import annotations

import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from netstubs import StubServer, ontology_responder_from_dir  # noqa: E402

from medgraph.cli import main as cli_main  # noqa: E402
from medgraph.enrichment import OntologyClient, OntologyClientConfig, enrich_concepts  # noqa: E402
from medgraph.filtration import FilterConfig  # noqa: E402
from medgraph.ingest import RawInput, parse_structured  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"


def regen_cache() -> None:
    cache_dir = FIXTURES / "ontology_cache"
    for stale in cache_dir.glob("*.json"):
        stale.unlink()
    concepts = parse_structured(
        RawInput.structured((FIXTURES / "terms.txt").read_text(encoding="utf-8").splitlines())
    )
    with StubServer(ontology_responder_from_dir(FIXTURES / "ontology_server")) as server:
        client = OntologyClient(
            OntologyClientConfig(
                base_url=server.url,
                api_key="fixture-key",
                min_request_interval=0.0,
                cache_dir=cache_dir,
            )
        )
        clusters = enrich_concepts(concepts, client, FilterConfig())
    print(f"wrote {len(clusters)} cache files to {cache_dir}")


def check_golden() -> None:
    with tempfile.TemporaryDirectory() as scratch:
        out = Path(scratch) / "out.cypher"
        code = cli_main(
            [
                "build",
                "--input", str(FIXTURES / "terms.txt"),
                "--format", "structured",
                "--cache-dir", str(FIXTURES / "ontology_cache"),
                "--embeddings", str(FIXTURES / "embeddings.jsonl"),
                "--complete", "both",
                "--out", str(out),
            ]
        )
        if code != 0:
            raise SystemExit(f"build failed with exit code {code}")
        produced = out.read_bytes()
    golden = (FIXTURES / "expected.cypher").read_bytes()
    if produced != golden:
        sys.stderr.write("pipeline output drifted from expected.cypher:\n")
        sys.stderr.write(produced.decode("utf-8"))
        raise SystemExit(1)
    print("pipeline output matches expected.cypher")


if __name__ == "__main__":
    regen_cache()
    check_golden()
