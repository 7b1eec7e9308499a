"""Subcommand CLI tying the pipeline together around a run manifest.

Every subcommand reads the manifest, performs one pipeline stage, writes
its outputs under the manifest's output directory, and prints one JSON
summary line per unit of work. Exit codes: 0 on success, 1 on validation
errors, 2 on runtime failures.
"""
from __future__ import annotations

import json
import logging
import random
import sys
from pathlib import Path

import click

from .adjudication import AdjudicationStore
from .assembly import (
    EQUIVALENCE_EXACT_MATCH,
    EQUIVALENCE_MERGE,
    assemble,
    emit_skos,
    transitive_reduction,
    write_rejections,
)
from .evaluation import (
    FAILURE_AS_OTHER,
    FAILURE_POLICIES,
    PredictionRecord,
    evaluate,
    read_predictions,
    render_report_json,
    render_report_markdown,
    report_from_dict,
    write_predictions,
)
from .finetune import export_conversations, export_path
from .graph import build_graph, graph_stats, load_graph, save_graph
from .inference import DIALECT_MOCK, InferenceClient, MOCK_ORACLE, MockScript
from .labels import PARSE_FAILURE, RelationLabel
from .manifest import (
    SAME_AS_AUTO_ACCEPT,
    ManifestError,
    RunManifest,
    derive_seed,
    load_manifest,
)
from .ntriples import parse_ntriples
from .pairs import LabeledPair, read_pairs, write_candidates, write_pairs
from .sampling import (
    accept_candidates,
    extract_sameas_candidates,
    sample_hierarchical,
    sample_other,
)
from .splits import (
    DatasetBundle,
    SplitSpec,
    label_counts,
    load_bundle,
    make_splits,
    merge_bundles,
    save_bundle,
)
from .strategies import (
    classify_pairs,
    read_outcomes,
    write_outcome_line,
)

logger = logging.getLogger(__name__)


class StageFailure(RuntimeError):
    pass


def _emit(summary: dict) -> None:
    click.echo(json.dumps(summary, ensure_ascii=False))


def _manifest_options(fn):
    fn = click.option(
        "--manifest",
        "manifest_path",
        required=True,
        type=click.Path(path_type=Path),
        help="Run manifest JSON file.",
    )(fn)
    fn = click.option(
        "--out",
        "out_dir",
        type=click.Path(path_type=Path),
        default=None,
        help="Override the manifest's output directory.",
    )(fn)
    fn = click.option(
        "--seed", type=int, default=None, help="Override the manifest seed."
    )(fn)
    return fn


def _load(manifest_path: Path, out_dir: Path | None, seed: int | None) -> RunManifest:
    return load_manifest(manifest_path, seed_override=seed, out_override=out_dir)


def _run(stage_fn, *args, **kwargs) -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        stage_fn(*args, **kwargs)
    except ManifestError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except (click.ClickException, SystemExit):
        raise
    except Exception as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


def _subdir(manifest: RunManifest, name: str) -> Path:
    path = manifest.output_dir / name
    path.mkdir(parents=True, exist_ok=True)
    return path


def _graph_path(manifest: RunManifest, source_name: str) -> Path:
    return _subdir(manifest, "graphs") / f"{source_name}.graph.json"


@click.group()
def main() -> None:
    """Topic relation dataset and ontology toolkit."""


@main.command()
@_manifest_options
def ingest(manifest_path: Path, out_dir: Path | None, seed: int | None) -> None:
    """Parse source taxonomies into normalized concept graphs."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        for source in manifest.sources:
            triples = parse_ntriples(source.path.read_text(encoding="utf-8"))
            graph = build_graph(triples, source.dialect)
            save_graph(graph, _graph_path(manifest, source.name))
            stats = graph_stats(graph)
            _emit(
                {
                    "stage": "ingest",
                    "source": source.name,
                    "dialect": source.dialect,
                    "concepts": stats.concepts,
                    "hierarchy_edges": stats.hierarchy_edges,
                    "related_edges": stats.related_edges,
                    "alt_labels": stats.alt_labels,
                    "hierarchy_cycles": stats.hierarchy_cycles,
                }
            )

    _run(stage)


def _sameas_path(manifest: RunManifest, source_name: str) -> Path:
    return _subdir(manifest, "adjudication") / f"{source_name}.sameas.jsonl"


def _candidates_path(manifest: RunManifest, source_name: str) -> Path:
    return _subdir(manifest, "adjudication") / f"{source_name}.candidates.jsonl"


def _sample_sameas(manifest: RunManifest, source_name: str, graph) -> list[LabeledPair]:
    spec = manifest.sampling[source_name].same_as
    candidates = extract_sameas_candidates(graph, source=source_name)
    if spec.mode == SAME_AS_AUTO_ACCEPT:
        if spec.count is not None:
            if spec.count > len(candidates):
                raise ManifestError(
                    f"{source_name}: same_as count {spec.count} exceeds "
                    f"{len(candidates)} available candidates"
                )
            rng = random.Random(derive_seed(manifest.seed, source_name, "sameas"))
            candidates = sorted(
                rng.sample(sorted(candidates, key=lambda c: c.pair_id), spec.count),
                key=lambda c: c.pair_id,
            )
        return accept_candidates(candidates)
    accepted_path = _sameas_path(manifest, source_name)
    if accepted_path.is_file():
        return read_pairs(accepted_path)
    count = write_candidates(_candidates_path(manifest, source_name), candidates)
    logger.warning(
        "%s: wrote %d candidates for adjudication; run the adjudicate "
        "subcommand and re-run sample to pick up accepted pairs",
        source_name,
        count,
    )
    return []


@main.command()
@_manifest_options
def sample(manifest_path: Path, out_dir: Path | None, seed: int | None) -> None:
    """Draw labeled pairs from the ingested graphs and cut the splits."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        datasets_dir = _subdir(manifest, "datasets")
        bundles = []
        for source in manifest.sources:
            graph_path = _graph_path(manifest, source.name)
            if not graph_path.is_file():
                raise ManifestError(
                    f"{source.name}: graph not found at {graph_path}; run ingest first"
                )
            graph = load_graph(graph_path)
            spec = manifest.sampling[source.name]
            pairs: list[LabeledPair] = []
            if spec.hierarchical_per_label:
                pairs.extend(
                    sample_hierarchical(
                        graph,
                        spec.hierarchical_per_label,
                        derive_seed(manifest.seed, source.name, "hier"),
                        source=source.name,
                    )
                )
            if spec.other:
                pairs.extend(
                    sample_other(
                        graph,
                        spec.other,
                        derive_seed(manifest.seed, source.name, "other"),
                        source=source.name,
                    )
                )
            pairs.extend(_sample_sameas(manifest, source.name, graph))
            bundle = make_splits(
                pairs,
                SplitSpec(
                    ratios=manifest.split.ratios,
                    seed=derive_seed(manifest.seed, source.name, "split"),
                ),
                name=source.name,
            )
            save_bundle(bundle, datasets_dir)
            bundles.append(bundle)
            _emit(
                {
                    "stage": "sample",
                    "source": source.name,
                    "labels": label_counts(bundle.all_pairs()),
                    "train": len(bundle.train),
                    "val": len(bundle.val),
                    "test": len(bundle.test),
                }
            )
        merged = merge_bundles(bundles, name=manifest.merged_name)
        save_bundle(merged, datasets_dir)
        _emit(
            {
                "stage": "sample",
                "source": manifest.merged_name,
                "labels": label_counts(merged.all_pairs()),
                "train": len(merged.train),
                "val": len(merged.val),
                "test": len(merged.test),
            }
        )

    _run(stage)


@main.command()
@_manifest_options
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8100, show_default=True)
@click.option(
    "--ui-dir",
    type=click.Path(path_type=Path),
    default=None,
    help="Directory of built review UI assets to serve at /.",
)
@click.option(
    "--export-only",
    is_flag=True,
    help="Write accepted same-as pairs per source and exit without serving.",
)
def adjudicate(
    manifest_path: Path,
    out_dir: Path | None,
    seed: int | None,
    host: str,
    port: int,
    ui_dir: Path | None,
    export_only: bool,
) -> None:
    """Serve the review queue over HTTP (or export accepted pairs)."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        store_dir = _subdir(manifest, "adjudication") / "store"
        store = AdjudicationStore(store_dir, policy=manifest.quorum)
        from .pairs import read_candidates

        enqueued = 0
        for source in manifest.sources:
            candidates_path = _candidates_path(manifest, source.name)
            if candidates_path.is_file():
                enqueued += store.enqueue(read_candidates(candidates_path))
        if export_only:
            accepted = store.finalize()
            by_source: dict[str, list[LabeledPair]] = {}
            for pair in accepted:
                by_source.setdefault(pair.source, []).append(pair)
            for source_name, pairs in sorted(by_source.items()):
                write_pairs(_sameas_path(manifest, source_name), pairs)
                _emit(
                    {
                        "stage": "adjudicate",
                        "source": source_name,
                        "accepted": len(pairs),
                    }
                )
            progress = store.progress()
            _emit({"stage": "adjudicate", "enqueued": enqueued, **progress})
            return

        from .service import create_app
        import uvicorn

        app = create_app(store, static_dir=ui_dir)
        _emit(
            {
                "stage": "adjudicate",
                "enqueued": enqueued,
                "url": f"http://{host}:{port}/",
                **store.progress(),
            }
        )
        uvicorn.run(app, host=host, port=port, log_level="warning")

    _run(stage)


@main.command(name="export-finetune")
@_manifest_options
@click.option(
    "--dataset",
    "dataset_name",
    default=None,
    help="Bundle to export (a source name or the merged name; default merged).",
)
def export_finetune(
    manifest_path: Path, out_dir: Path | None, seed: int | None, dataset_name: str | None
) -> None:
    """Write chat-format fine-tuning files for every split of a bundle."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        name = dataset_name or manifest.merged_name
        bundle = _load_bundle(manifest, name)
        finetune_dir = _subdir(manifest, "finetune")
        counts = {}
        for split, _ in bundle.splits():
            path = export_path(finetune_dir, name, split)
            counts[split] = export_conversations(bundle, split, path)
        _emit({"stage": "export-finetune", "dataset": name, **counts})

    _run(stage)


def _load_bundle(manifest: RunManifest, name: str) -> DatasetBundle:
    known = [s.name for s in manifest.sources] + [manifest.merged_name]
    if name not in known:
        raise ManifestError(f"unknown dataset {name!r}; expected one of {known}")
    datasets_dir = manifest.output_dir / "datasets"
    try:
        return load_bundle(datasets_dir, name)
    except FileNotFoundError as exc:
        raise ManifestError(f"dataset files missing ({exc}); run sample first") from None


def _split_pairs(bundle: DatasetBundle, split: str) -> list[LabeledPair]:
    for name, pairs in bundle.splits():
        if name == split:
            return pairs
    raise ManifestError(f"unknown split {split!r}")


def _outcomes_path(manifest: RunManifest, dataset: str, split: str, strategy: str) -> Path:
    return _subdir(manifest, "classify") / f"{dataset}.{split}.{strategy}.outcomes.jsonl"


@main.command()
@_manifest_options
@click.option("--dataset", "dataset_name", default=None)
@click.option("--split", default="test", show_default=True)
@click.option(
    "--audit-log",
    is_flag=True,
    help="Record every request and response under <out>/classify/.",
)
def classify(
    manifest_path: Path,
    out_dir: Path | None,
    seed: int | None,
    dataset_name: str | None,
    split: str,
    audit_log: bool,
) -> None:
    """Classify one split with the configured endpoint and strategy."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        if manifest.endpoint is None:
            raise ManifestError("manifest has no endpoint section")
        name = dataset_name or manifest.merged_name
        pairs = _split_pairs(_load_bundle(manifest, name), split)

        mock = manifest.mock
        if mock is not None and mock.mode == MOCK_ORACLE:
            mock = MockScript(
                mode=MOCK_ORACLE, gold={p.pair_id: p.label for p in pairs}
            )
        audit_path = None
        if audit_log:
            audit_path = _subdir(manifest, "classify") / (
                f"{name}.{split}.{manifest.strategy}.audit.jsonl"
            )
            audit_path.unlink(missing_ok=True)
        client = InferenceClient(manifest.endpoint, mock=mock, audit_log=audit_path)

        outcomes_path = _outcomes_path(manifest, name, split, manifest.strategy)
        counts = {label.value: 0 for label in RelationLabel}
        counts[PARSE_FAILURE] = 0
        errors = 0
        with open(outcomes_path, "w", encoding="utf-8") as handle:
            for outcome in classify_pairs(
                pairs, client, manifest.strategy, manifest.templates
            ):
                write_outcome_line(handle, outcome)
                key = (
                    outcome.final_label.value
                    if outcome.final_label is not None
                    else PARSE_FAILURE
                )
                counts[key] += 1
                runs = [outcome.run_ab] + ([outcome.run_ba] if outcome.run_ba else [])
                if any(run.error for run in runs):
                    errors += 1
        _emit(
            {
                "stage": "classify",
                "dataset": name,
                "split": split,
                "strategy": manifest.strategy,
                "outcomes": len(pairs),
                "transport_errors": errors,
                "labels": counts,
            }
        )
        if errors:
            raise StageFailure(f"{errors} pair(s) failed with transport errors")

    _run(stage)


@main.command()
@_manifest_options
@click.option("--dataset", "dataset_name", default=None)
@click.option("--split", default="test", show_default=True)
@click.option(
    "--failure-policy",
    type=click.Choice(FAILURE_POLICIES),
    default=FAILURE_AS_OTHER,
    show_default=True,
)
@click.option(
    "--predictions",
    "predictions_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Evaluate an existing predictions file instead of joining outcomes.",
)
def evaluate_cmd(
    manifest_path: Path,
    out_dir: Path | None,
    seed: int | None,
    dataset_name: str | None,
    split: str,
    failure_policy: str,
    predictions_path: Path | None,
) -> None:
    """Score predictions against gold labels and write the reports."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        eval_dir = _subdir(manifest, "eval")
        if predictions_path is not None:
            if not predictions_path.is_file():
                raise ManifestError(f"predictions file not found: {predictions_path}")
            records = read_predictions(predictions_path)
        else:
            name = dataset_name or manifest.merged_name
            pairs = _split_pairs(_load_bundle(manifest, name), split)
            outcomes_path = _outcomes_path(manifest, name, split, manifest.strategy)
            if not outcomes_path.is_file():
                raise ManifestError(
                    f"outcomes not found at {outcomes_path}; run classify first"
                )
            outcomes = {o.pair_id: o for o in read_outcomes(outcomes_path)}
            missing = [p.pair_id for p in pairs if p.pair_id not in outcomes]
            if missing:
                raise ManifestError(
                    f"{len(missing)} pair(s) have no outcome (first: {missing[0]})"
                )
            extra = set(outcomes) - {p.pair_id for p in pairs}
            if extra:
                raise ManifestError(
                    f"{len(extra)} outcome(s) match no pair (first: {sorted(extra)[0]})"
                )
            records = [
                PredictionRecord(
                    pair_id=p.pair_id,
                    gold=p.label,
                    predicted=outcomes[p.pair_id].final_label,
                )
                for p in pairs
            ]
            write_predictions(
                eval_dir / f"{name}.{split}.{manifest.strategy}.predictions.jsonl",
                records,
            )
        report = evaluate(records, failure_policy)
        (eval_dir / "report.json").write_text(
            render_report_json(report), encoding="utf-8"
        )
        (eval_dir / "report.md").write_text(
            render_report_markdown(report), encoding="utf-8"
        )
        _emit(
            {
                "stage": "evaluate",
                "records": report.record_count,
                "parse_failures": report.parse_failure_count,
                "macro_f1": report.macro.f1,
                "macro_precision": report.macro.precision,
                "macro_recall": report.macro.recall,
            }
        )

    _run(stage)


main.add_command(evaluate_cmd, name="evaluate")


@main.command()
@_manifest_options
@click.option("--dataset", "dataset_name", default=None)
@click.option("--split", default="test", show_default=True)
@click.option(
    "--from-pairs",
    "pairs_path",
    type=click.Path(path_type=Path),
    default=None,
    help="Assemble gold labels from a pairs JSONL file instead of outcomes.",
)
@click.option("--reduce", "reduce_edges", is_flag=True, help="Apply transitive reduction.")
@click.option("--base-iri", default="urn:topic:", show_default=True)
@click.option(
    "--equivalence",
    type=click.Choice([EQUIVALENCE_MERGE, EQUIVALENCE_EXACT_MATCH]),
    default=EQUIVALENCE_MERGE,
    show_default=True,
)
def assemble_cmd(
    manifest_path: Path,
    out_dir: Path | None,
    seed: int | None,
    dataset_name: str | None,
    split: str,
    pairs_path: Path | None,
    reduce_edges: bool,
    base_iri: str,
    equivalence: str,
) -> None:
    """Assemble classified relations into an ontology and emit N-Triples."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        skipped_failures = 0
        if pairs_path is not None:
            if not pairs_path.is_file():
                raise ManifestError(f"pairs file not found: {pairs_path}")
            pairs = read_pairs(pairs_path)
        else:
            name = dataset_name or manifest.merged_name
            gold_pairs = _split_pairs(_load_bundle(manifest, name), split)
            outcomes_path = _outcomes_path(manifest, name, split, manifest.strategy)
            if not outcomes_path.is_file():
                raise ManifestError(
                    f"outcomes not found at {outcomes_path}; run classify first"
                )
            outcomes = {o.pair_id: o for o in read_outcomes(outcomes_path)}
            pairs = []
            for pair in gold_pairs:
                outcome = outcomes.get(pair.pair_id)
                if outcome is None:
                    raise ManifestError(f"pair {pair.pair_id} has no outcome")
                if outcome.final_label is None:
                    skipped_failures += 1
                    continue
                pairs.append(
                    LabeledPair(
                        pair_id=pair.pair_id,
                        topic_a=pair.topic_a,
                        topic_b=pair.topic_b,
                        label=outcome.final_label,
                        source=pair.source,
                        provenance=pair.provenance,
                    )
                )
        ontology = assemble(pairs)
        if reduce_edges:
            ontology = transitive_reduction(ontology)
        ontology_dir = _subdir(manifest, "ontology")
        (ontology_dir / "ontology.nt").write_text(
            emit_skos(ontology, base_iri, equivalence), encoding="utf-8"
        )
        write_rejections(ontology_dir / "rejected.jsonl", ontology.rejected)
        _emit(
            {
                "stage": "assemble",
                "concepts": len(ontology.concepts),
                "hierarchy_edges": len(ontology.hierarchy),
                "equivalence_classes": len(ontology.equivalences),
                "rejected": len(ontology.rejected),
                "skipped_parse_failures": skipped_failures,
            }
        )

    _run(stage)


main.add_command(assemble_cmd, name="assemble")


@main.command()
@_manifest_options
def report(manifest_path: Path, out_dir: Path | None, seed: int | None) -> None:
    """Re-render report.md from report.json and print the headline numbers."""

    def stage() -> None:
        manifest = _load(manifest_path, out_dir, seed)
        report_path = manifest.output_dir / "eval" / "report.json"
        if not report_path.is_file():
            raise ManifestError(f"report not found at {report_path}; run evaluate first")
        data = json.loads(report_path.read_text(encoding="utf-8"))
        loaded = report_from_dict(data)
        (manifest.output_dir / "eval" / "report.md").write_text(
            render_report_markdown(loaded), encoding="utf-8"
        )
        _emit(
            {
                "stage": "report",
                "records": loaded.record_count,
                "parse_failures": loaded.parse_failure_count,
                "macro_f1": loaded.macro.f1,
            }
        )

    _run(stage)


if __name__ == "__main__":
    main()
