from __future__ import annotations

import json
import shutil
import subprocess

import pytest

from medgraph.cli import build_parser, main, resolve_config
from medgraph.errors import ConfigError


@pytest.fixture(autouse=True)
def no_ambient_api_key(monkeypatch):
    monkeypatch.delenv("ONTOLOGY_API_KEY", raising=False)


@pytest.fixture()
def workdir(tmp_path, fixtures_dir):
    """Copy of the small fixture inputs next to a scratch output area."""
    for name in ("terms.txt", "pairs.csv", "embeddings.jsonl", "gazetteer.txt"):
        shutil.copy(fixtures_dir / name, tmp_path / name)
    shutil.copytree(fixtures_dir / "ontology_cache", tmp_path / "cache")
    return tmp_path


def build_args(workdir, *extra: str) -> list[str]:
    return [
        "build",
        "--input", str(workdir / "terms.txt"),
        "--format", "structured",
        "--cache-dir", str(workdir / "cache"),
        "--embeddings", str(workdir / "embeddings.jsonl"),
        *extra,
    ]


def parse(argv: list[str]):
    return build_parser().parse_args(argv)


class TestConfigResolution:
    def test_defaults(self):
        cfg = resolve_config(parse(["extract"]))
        assert cfg.fuzzy_threshold == 0.90
        assert cfg.threshold == 4.0
        assert cfg.complete == "both"
        assert cfg.enrich is True

    def test_file_overrides_defaults(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"fuzzy_threshold": 0.8, "chunk_size": 16}))
        cfg = resolve_config(parse(["extract", "--config", str(config)]))
        assert cfg.fuzzy_threshold == 0.8
        assert cfg.chunk_size == 16
        assert cfg.threshold == 4.0  # untouched default

    def test_flag_overrides_file(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"fuzzy_threshold": 0.8, "threshold": 2.0}))
        cfg = resolve_config(
            parse(["extract", "--config", str(config), "--fuzzy-threshold", "0.7"])
        )
        assert cfg.fuzzy_threshold == 0.7
        assert cfg.threshold == 2.0

    def test_boolean_flag_overrides_file(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"enrich": True}))
        cfg = resolve_config(parse(["build", "--config", str(config), "--no-enrich"]))
        assert cfg.enrich is False

    def test_unknown_config_key(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"fuzy_threshold": 0.8}))
        with pytest.raises(ConfigError, match="fuzy_threshold"):
            resolve_config(parse(["extract", "--config", str(config)]))

    def test_config_not_an_object(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            resolve_config(parse(["extract", "--config", str(config)]))

    def test_config_invalid_json(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text("{nope}")
        with pytest.raises(ConfigError):
            resolve_config(parse(["extract", "--config", str(config)]))

    def test_missing_input_path(self, tmp_path):
        with pytest.raises(ConfigError, match="--input"):
            resolve_config(parse(["extract", "--input", str(tmp_path / "gone.txt")]))

    def test_embeddings_and_embed_url_conflict(self, workdir):
        with pytest.raises(ConfigError, match="mutually exclusive"):
            resolve_config(
                parse(
                    [
                        "build",
                        "--embeddings", str(workdir / "embeddings.jsonl"),
                        "--embed-url", "http://127.0.0.1:1/",
                    ]
                )
            )

    def test_bad_complete_mode_rejected_by_parser(self):
        with pytest.raises(SystemExit) as info:
            parse(["build", "--complete", "sometimes"])
        assert info.value.code == 1


class TestUsageErrors:
    def test_no_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 1

    def test_unknown_flag(self):
        with pytest.raises(SystemExit) as info:
            main(["build", "--nonsense"])
        assert info.value.code == 1


class TestExtract:
    def test_writes_concepts_artifact(self, workdir, capsys):
        out = workdir / "concepts.json"
        code = main(
            [
                "extract",
                "--input", str(workdir / "terms.txt"),
                "--out", str(out),
            ]
        )
        assert code == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert [item["concept"]["normalized_text"] for item in data] == [
            "fever",
            "diarrhea",
            "insomnia",
            "severe acute respiratory syndrome",
            "diabetes",
        ]
        assert all(item["synonyms"] == [] for item in data)
        assert "wrote 5 concepts" in capsys.readouterr().out

    def test_unstructured_with_gazetteer(self, workdir):
        document = workdir / "note.txt"
        document.write_text(
            "Patient reports FEVER and polyuria; fever persisted overnight.",
            encoding="utf-8",
        )
        out = workdir / "concepts.json"
        code = main(
            [
                "extract",
                "--input", str(document),
                "--format", "unstructured",
                "--gazetteer", str(workdir / "gazetteer.txt"),
                "--out", str(out),
            ]
        )
        assert code == 0
        data = json.loads(out.read_text(encoding="utf-8"))
        assert [item["concept"]["normalized_text"] for item in data] == ["fever", "polyuria"]

    def test_unstructured_without_extractor(self, workdir):
        document = workdir / "note.txt"
        document.write_text("fever", encoding="utf-8")
        code = main(
            [
                "extract",
                "--input", str(document),
                "--format", "unstructured",
                "--out", str(workdir / "concepts.json"),
            ]
        )
        assert code == 1

    def test_missing_out(self, workdir):
        assert main(["extract", "--input", str(workdir / "terms.txt")]) == 1

    def test_config_only_exclude_list_and_rejects(self, workdir):
        config = workdir / "cfg.json"
        config.write_text(json.dumps({"exclude": ["diabetes"]}))
        rejects = workdir / "rejects.jsonl"
        code = main(
            [
                "extract",
                "--config", str(config),
                "--input", str(workdir / "terms.txt"),
                "--out", str(workdir / "concepts.json"),
                "--rejects", str(rejects),
            ]
        )
        assert code == 0
        data = json.loads((workdir / "concepts.json").read_text(encoding="utf-8"))
        assert "diabetes" not in [item["concept"]["normalized_text"] for item in data]
        entries = [
            json.loads(line) for line in rejects.read_text(encoding="utf-8").splitlines()
        ]
        assert {"text": "diabetes", "reason": "excluded"} in entries


class TestBuild:
    def test_matches_golden_script(self, workdir, fixtures_dir):
        out = workdir / "graph.cypher"
        assert main(build_args(workdir, "--out", str(out))) == 0
        expected = (fixtures_dir / "expected.cypher").read_bytes()
        assert out.read_bytes() == expected

    def test_two_runs_byte_identical(self, workdir):
        first, second = workdir / "a.cypher", workdir / "b.cypher"
        assert main(build_args(workdir, "--out", str(first))) == 0
        assert main(build_args(workdir, "--out", str(second))) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_complete_off_leaves_only_taxonomy_edges(self, workdir):
        out = workdir / "graph.cypher"
        assert main(build_args(workdir, "--complete", "off", "--out", str(out))) == 0
        script = out.read_text(encoding="utf-8")
        assert "embedding_match" not in script
        assert "HAS_SYNONYM" in script

    def test_no_enrich_skips_cache_and_synonyms(self, workdir):
        out = workdir / "graph.cypher"
        code = main(
            build_args(workdir, "--no-enrich", "--complete", "off", "--out", str(out))
        )
        assert code == 0
        script = out.read_text(encoding="utf-8")
        assert "HAS_SYNONYM" not in script
        assert script.count("MERGE (:Concept") == 5

    def test_from_concepts_artifact(self, workdir):
        artifact = workdir / "concepts.json"
        code = main(
            [
                "enrich",
                "--input", str(workdir / "terms.txt"),
                "--cache-dir", str(workdir / "cache"),
                "--out", str(artifact),
            ]
        )
        assert code == 0
        direct = workdir / "direct.cypher"
        via_artifact = workdir / "artifact.cypher"
        assert main(build_args(workdir, "--out", str(direct))) == 0
        code = main(
            [
                "build",
                "--concepts", str(artifact),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--out", str(via_artifact),
            ]
        )
        assert code == 0
        assert via_artifact.read_bytes() == direct.read_bytes()

    def test_missing_api_key_cold_cache_exits_2(self, workdir):
        cold = workdir / "cold_cache"
        cold.mkdir()
        out = workdir / "graph.cypher"
        code = main(
            [
                "build",
                "--input", str(workdir / "terms.txt"),
                "--cache-dir", str(cold),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--out", str(out),
            ]
        )
        assert code == 2

    def test_unwritable_out_exits_3(self, workdir):
        out = workdir / "missing_dir" / "graph.cypher"
        assert main(build_args(workdir, "--out", str(out))) == 3

    def test_malformed_concepts_artifact_exits_1(self, workdir):
        artifact = workdir / "concepts.json"
        artifact.write_text('{"not": "a list"}', encoding="utf-8")
        code = main(
            [
                "build",
                "--concepts", str(artifact),
                "--complete", "off",
                "--out", str(workdir / "graph.cypher"),
            ]
        )
        assert code == 1


class TestComplete:
    def test_requires_concepts(self, workdir):
        assert main(["complete", "--out", str(workdir / "graph.cypher")]) == 1

    def test_requires_active_mode(self, workdir):
        artifact = workdir / "concepts.json"
        main(
            [
                "enrich",
                "--input", str(workdir / "terms.txt"),
                "--cache-dir", str(workdir / "cache"),
                "--out", str(artifact),
            ]
        )
        code = main(
            [
                "complete",
                "--concepts", str(artifact),
                "--complete", "off",
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--out", str(workdir / "graph.cypher"),
            ]
        )
        assert code == 1

    def test_per_mode_threshold_overrides(self, workdir):
        artifact = workdir / "concepts.json"
        main(
            [
                "enrich",
                "--input", str(workdir / "terms.txt"),
                "--cache-dir", str(workdir / "cache"),
                "--out", str(artifact),
            ]
        )
        out = workdir / "graph.cypher"
        code = main(
            [
                "complete",
                "--concepts", str(artifact),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--complete", "both",
                "--threshold", "4.0",
                "--cluster-threshold", "1.0",  # kills the 3.2 cluster edge
                "--out", str(out),
            ]
        )
        assert code == 0
        script = out.read_text(encoding="utf-8")
        assert "embedding_match_cluster" not in script
        assert "embedding_match_node" in script


class TestEval:
    @pytest.fixture()
    def artifact(self, workdir):
        path = workdir / "concepts.json"
        code = main(
            [
                "enrich",
                "--input", str(workdir / "terms.txt"),
                "--cache-dir", str(workdir / "cache"),
                "--out", str(path),
            ]
        )
        assert code == 0
        return path

    def test_node_mode_metrics(self, workdir, artifact, capsys):
        metrics = workdir / "metrics.json"
        code = main(
            [
                "eval",
                "--concepts", str(artifact),
                "--pairs", str(workdir / "pairs.csv"),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--complete", "node",
                "--metrics-out", str(metrics),
            ]
        )
        assert code == 0
        table = capsys.readouterr().out
        assert "tp         1" in table
        payload = json.loads(metrics.read_text(encoding="utf-8"))
        assert payload == {
            "tp": 1,
            "fp": 0,
            "tn": 3,
            "fn": 1,
            "accuracy": 0.8,
            "precision": 1.0,
            "recall": 0.5,
            "f1": payload["f1"],
        }
        assert payload["f1"] == pytest.approx(2 / 3)

    def test_malformed_pairs_exits_1(self, workdir, artifact):
        bad = workdir / "bad.csv"
        bad.write_text("concept_a,concept_b,label\nfever,insomnia,maybe\n")
        code = main(
            [
                "eval",
                "--concepts", str(artifact),
                "--pairs", str(bad),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--complete", "node",
            ]
        )
        assert code == 1

    def test_header_only_pairs_exits_1(self, workdir, artifact):
        empty = workdir / "empty.csv"
        empty.write_text("concept_a,concept_b,label\n")
        code = main(
            [
                "eval",
                "--concepts", str(artifact),
                "--pairs", str(empty),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--complete", "node",
            ]
        )
        assert code == 1

    def test_requires_pairs(self, workdir, artifact):
        code = main(
            [
                "eval",
                "--concepts", str(artifact),
                "--embeddings", str(workdir / "embeddings.jsonl"),
                "--complete", "node",
            ]
        )
        assert code == 1


class TestConsoleScript:
    def test_installed_entry_point(self, workdir):
        executable = shutil.which("medgraph")
        assert executable, "medgraph console script not on PATH"
        result = subprocess.run(
            [
                executable,
                "extract",
                "--input", str(workdir / "terms.txt"),
                "--out", str(workdir / "concepts.json"),
            ],
            capture_output=True,
            text=True,
            timeout=60,
        )
        assert result.returncode == 0, result.stderr
        assert (workdir / "concepts.json").exists()
