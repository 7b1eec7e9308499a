from __future__ import annotations

import hashlib
import json

import pytest
from click.testing import CliRunner

from topicrel.adjudication import AdjudicationStore, Verdict, utc_now_iso
from topicrel.cli import main
from topicrel.finetune import read_conversations
from topicrel.graph import SKOS_CORE, build_graph
from topicrel.ntriples import parse_ntriples
from topicrel.pairs import PROVENANCE_ADJUDICATED, read_pairs
from topicrel.strategies import read_outcomes

from util import forest, skos_nt


def _write_corpus(tmp_path, manifest_extra=None):
    concepts, edges = forest("demo", trees=8, branching=2, depth=2, alts=True)
    (tmp_path / "demo.nt").write_text(skos_nt(concepts, edges), encoding="utf-8")
    manifest = {
        "seed": 11,
        "sources": [{"name": "demo", "path": "demo.nt", "dialect": "skos-core"}],
        "sampling": {
            "demo": {
                "hierarchical_per_label": 10,
                "other": 10,
                "same_as": {"mode": "auto-accept", "count": 10},
            }
        },
        "strategy": "bidirectional-cot",
        "endpoint": {"dialect": "mock", "mock": {"mode": "oracle"}},
    }
    if manifest_extra:
        manifest.update(manifest_extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(manifest), encoding="utf-8")
    return path


def _invoke(args, expect=0):
    result = CliRunner().invoke(main, [str(a) for a in args])
    assert result.exit_code == expect, result.output
    return result


def _json_lines(result):
    return [json.loads(line) for line in result.output.splitlines() if line.startswith("{")]


def _text(result):
    # result.stderr is unavailable when the runner mixes the streams
    try:
        return result.output + result.stderr
    except ValueError:
        return result.output


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_full_pipeline_with_an_oracle_endpoint(tmp_path):
    manifest = _write_corpus(tmp_path)
    out = tmp_path / "out"

    ingest = _json_lines(_invoke(["ingest", "--manifest", manifest]))
    assert ingest == [
        {
            "stage": "ingest",
            "source": "demo",
            "dialect": "skos-core",
            "concepts": 56,
            "hierarchy_edges": 48,
            "related_edges": 0,
            "alt_labels": 56,
            "hierarchy_cycles": 0,
        }
    ]
    assert (out / "graphs" / "demo.graph.json").is_file()

    rows = _json_lines(_invoke(["sample", "--manifest", manifest]))
    assert [r["source"] for r in rows] == ["demo", "merged"]
    for row in rows:
        assert row["labels"] == {"broader": 10, "narrower": 10, "same-as": 10, "other": 10}
        assert (row["train"], row["val"], row["test"]) == (28, 4, 8)
    for split, count in (("train", 28), ("val", 4), ("test", 8)):
        assert len(read_pairs(out / "datasets" / f"merged.{split}.jsonl")) == count

    rows = _json_lines(_invoke(["export-finetune", "--manifest", manifest]))
    assert rows == [
        {"stage": "export-finetune", "dataset": "merged", "train": 28, "val": 4, "test": 8}
    ]
    records = read_conversations(out / "finetune" / "merged.train.chat.jsonl")
    assert len(records) == 28

    rows = _json_lines(_invoke(["classify", "--manifest", manifest, "--audit-log"]))
    assert rows[-1]["outcomes"] == 8
    assert rows[-1]["transport_errors"] == 0
    assert rows[-1]["labels"]["parse-failure"] == 0
    outcomes_path = out / "classify" / "merged.test.bidirectional-cot.outcomes.jsonl"
    outcomes = read_outcomes(outcomes_path)
    assert len(outcomes) == 8
    assert all(o.run_ba is not None for o in outcomes)
    audit_path = out / "classify" / "merged.test.bidirectional-cot.audit.jsonl"
    # two directions, two stages each
    assert len(audit_path.read_text().splitlines()) == 8 * 4

    rows = _json_lines(_invoke(["evaluate", "--manifest", manifest]))
    assert rows[-1]["macro_f1"] == 1.0
    assert rows[-1]["parse_failures"] == 0
    report = json.loads((out / "eval" / "report.json").read_text())
    assert report["macro"]["f1"] == 1.0
    assert (out / "eval" / "report.md").read_text().startswith("# Evaluation report")
    assert (out / "eval" / "merged.test.bidirectional-cot.predictions.jsonl").is_file()

    rows = _json_lines(_invoke(["assemble", "--manifest", manifest, "--reduce"]))
    assert rows[-1]["rejected"] == 0
    assert rows[-1]["skipped_parse_failures"] == 0
    ontology_text = (out / "ontology" / "ontology.nt").read_text()
    graph = build_graph(parse_ntriples(ontology_text), SKOS_CORE)
    assert len(graph.hierarchy_edges) == 4  # two broader + two narrower test pairs

    rows = _json_lines(_invoke(["report", "--manifest", manifest]))
    assert rows == [
        {"stage": "report", "records": 8, "parse_failures": 0, "macro_f1": 1.0}
    ]


def test_sampling_is_reproducible_byte_for_byte(tmp_path):
    manifest = _write_corpus(tmp_path)
    out = tmp_path / "out"
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    files = sorted((out / "datasets").iterdir())
    assert len(files) == 6
    before = {f.name: _digest(f) for f in files}
    _invoke(["sample", "--manifest", manifest])
    after = {f.name: _digest(f) for f in sorted((out / "datasets").iterdir())}
    assert after == before


def test_seed_override_changes_the_sample(tmp_path):
    manifest = _write_corpus(tmp_path)
    out = tmp_path / "out"
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    before = (out / "datasets" / "merged.train.jsonl").read_bytes()
    _invoke(["sample", "--manifest", manifest, "--seed", "12"])
    assert (out / "datasets" / "merged.train.jsonl").read_bytes() != before


def test_missing_manifest_is_a_validation_error(tmp_path):
    result = CliRunner().invoke(main, ["sample", "--manifest", str(tmp_path / "no.json")])
    assert result.exit_code == 1
    assert "error:" in _text(result)


def test_sampling_requires_ingested_graphs(tmp_path):
    manifest = _write_corpus(tmp_path)
    result = CliRunner().invoke(main, ["sample", "--manifest", str(manifest)])
    assert result.exit_code == 1
    assert "run ingest first" in _text(result)


def test_classify_needs_an_endpoint_section(tmp_path):
    manifest = _write_corpus(tmp_path, {"endpoint": None, "strategy": "standard"})
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    result = CliRunner().invoke(main, ["classify", "--manifest", str(manifest)])
    assert result.exit_code == 1
    assert "endpoint" in _text(result)


def test_unreachable_endpoint_still_writes_every_outcome(tmp_path):
    manifest = _write_corpus(
        tmp_path,
        {
            "strategy": "standard",
            "endpoint": {
                "dialect": "simple-generate",
                "base_url": "http://127.0.0.1:9/generate",
                "retries": 0,
                "timeout": 2,
            },
        },
    )
    out = tmp_path / "out"
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    result = CliRunner().invoke(main, ["classify", "--manifest", str(manifest)])
    assert result.exit_code == 2
    summary = _json_lines(result)[-1]
    assert summary["transport_errors"] == 8
    outcomes = read_outcomes(out / "classify" / "merged.test.standard.outcomes.jsonl")
    assert len(outcomes) == 8
    assert all(o.run_ab.error for o in outcomes)
    assert all(o.final_label is None for o in outcomes)


def test_evaluate_rejects_outcome_gaps(tmp_path):
    manifest = _write_corpus(tmp_path)
    out = tmp_path / "out"
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    _invoke(["classify", "--manifest", manifest])
    outcomes_path = out / "classify" / "merged.test.bidirectional-cot.outcomes.jsonl"
    lines = outcomes_path.read_text().splitlines()
    outcomes_path.write_text("\n".join(lines[:-1]) + "\n")
    result = CliRunner().invoke(main, ["evaluate", "--manifest", str(manifest)])
    assert result.exit_code == 1
    assert "no outcome" in _text(result)


def test_adjudication_gates_sameas_pairs(tmp_path):
    manifest = _write_corpus(
        tmp_path,
        {
            "sampling": {
                "demo": {
                    "hierarchical_per_label": 4,
                    "other": 4,
                    "same_as": {"mode": "adjudicate"},
                }
            }
        },
    )
    out = tmp_path / "out"
    _invoke(["ingest", "--manifest", manifest])

    rows = _json_lines(_invoke(["sample", "--manifest", manifest]))
    assert rows[0]["labels"]["same-as"] == 0
    assert (rows[0]["train"], rows[0]["val"], rows[0]["test"]) == (9, 0, 3)
    candidates_path = out / "adjudication" / "demo.candidates.jsonl"
    assert len(candidates_path.read_text().splitlines()) == 56

    rows = _json_lines(_invoke(["adjudicate", "--manifest", manifest, "--export-only"]))
    assert rows[-1]["enqueued"] == 56
    assert rows[-1]["pending"] == 56
    assert not (out / "adjudication" / "demo.sameas.jsonl").exists()

    store = AdjudicationStore(out / "adjudication" / "store")
    wanted = sorted(c.pair_id for c in store.candidates())[:10]
    for pair_id in wanted:
        for annotator in ("alice", "bob"):
            store.record_verdict(
                Verdict(
                    pair_id=pair_id,
                    annotator=annotator,
                    decision="accept",
                    timestamp=utc_now_iso(),
                )
            )

    rows = _json_lines(_invoke(["adjudicate", "--manifest", manifest, "--export-only"]))
    accepted_rows = [r for r in rows if "source" in r]
    assert accepted_rows == [{"stage": "adjudicate", "source": "demo", "accepted": 10}]
    accepted = read_pairs(out / "adjudication" / "demo.sameas.jsonl")
    assert sorted(p.pair_id for p in accepted) == wanted
    assert all(p.provenance == PROVENANCE_ADJUDICATED for p in accepted)

    rows = _json_lines(_invoke(["sample", "--manifest", manifest]))
    assert rows[0]["labels"]["same-as"] == 10
    assert (rows[0]["train"], rows[0]["val"], rows[0]["test"]) == (16, 1, 5)


def test_export_finetune_knows_every_bundle_name(tmp_path):
    manifest = _write_corpus(tmp_path)
    _invoke(["ingest", "--manifest", manifest])
    _invoke(["sample", "--manifest", manifest])
    _invoke(["export-finetune", "--manifest", manifest, "--dataset", "demo"])
    result = CliRunner().invoke(
        main, ["export-finetune", "--manifest", str(manifest), "--dataset", "ghost"]
    )
    assert result.exit_code == 1
    assert "unknown dataset" in _text(result)
