"""Confusion matrices and precision/recall/F1 reports for relation predictions.

Gold labels span the four-label vocabulary; predictions may additionally
be a parse failure, giving the matrix four rows and five columns. Under
the default failure policy a parse failure counts as a prediction of
``other``; the alternative keeps it in its own column, where it can only
cost recall. Metrics with an empty denominator are defined as 0.0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .labels import LABEL_ORDER, PARSE_FAILURE, RelationLabel, parse_relation_label

FAILURE_AS_OTHER = "as-other"
FAILURE_OWN_COLUMN = "as-own-column"
FAILURE_POLICIES = (FAILURE_AS_OTHER, FAILURE_OWN_COLUMN)

PREDICTED_COLUMNS = tuple(label.value for label in LABEL_ORDER) + (PARSE_FAILURE,)

# Abbreviations used for report columns, in presentation order.
_ABBREV = {
    RelationLabel.BROADER: "BR",
    RelationLabel.NARROWER: "NR",
    RelationLabel.OTHER: "OT",
    RelationLabel.SAME_AS: "SA",
}


class DuplicatePairId(ValueError):
    def __init__(self, pair_id: str):
        super().__init__(f"duplicate pair_id in predictions: {pair_id}")
        self.pair_id = pair_id


@dataclass(frozen=True)
class PredictionRecord:
    pair_id: str
    gold: RelationLabel
    predicted: RelationLabel | None


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class AverageMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed by (gold label value, predicted column value)."""

    counts: dict[tuple[str, str], int]

    def cell(self, gold: RelationLabel, predicted: str) -> int:
        return self.counts.get((gold.value, predicted), 0)

    def row_sum(self, gold: RelationLabel) -> int:
        return sum(self.cell(gold, col) for col in PREDICTED_COLUMNS)

    def total(self) -> int:
        return sum(self.counts.values())

    def parse_failures(self) -> int:
        return sum(self.cell(gold, PARSE_FAILURE) for gold in LABEL_ORDER)


def confusion_matrix(records: Sequence[PredictionRecord]) -> ConfusionMatrix:
    seen: set[str] = set()
    counts: dict[tuple[str, str], int] = {}
    for record in records:
        if record.pair_id in seen:
            raise DuplicatePairId(record.pair_id)
        seen.add(record.pair_id)
        predicted = (
            record.predicted.value if record.predicted is not None else PARSE_FAILURE
        )
        key = (record.gold.value, predicted)
        counts[key] = counts.get(key, 0) + 1
    return ConfusionMatrix(counts)


def _safe_div(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator else 0.0


def _f1(precision: float, recall: float) -> float:
    return _safe_div(2 * precision * recall, precision + recall)


def per_class_metrics(
    matrix: ConfusionMatrix, failure_policy: str = FAILURE_AS_OTHER
) -> dict[RelationLabel, ClassMetrics]:
    if failure_policy not in FAILURE_POLICIES:
        raise ValueError(f"unknown failure policy: {failure_policy!r}")

    def predicted_count(gold: RelationLabel, label: RelationLabel) -> int:
        count = matrix.cell(gold, label.value)
        if failure_policy == FAILURE_AS_OTHER and label is RelationLabel.OTHER:
            count += matrix.cell(gold, PARSE_FAILURE)
        return count

    metrics: dict[RelationLabel, ClassMetrics] = {}
    for label in LABEL_ORDER:
        tp = predicted_count(label, label)
        fp = sum(
            predicted_count(gold, label) for gold in LABEL_ORDER if gold is not label
        )
        support = matrix.row_sum(label)
        fn = support - tp
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        metrics[label] = ClassMetrics(precision, recall, _f1(precision, recall), support)
    return metrics


def macro_average(per_class: dict[RelationLabel, ClassMetrics]) -> AverageMetrics:
    """Unweighted mean over the four classes."""
    n = len(LABEL_ORDER)
    return AverageMetrics(
        precision=sum(per_class[label].precision for label in LABEL_ORDER) / n,
        recall=sum(per_class[label].recall for label in LABEL_ORDER) / n,
        f1=sum(per_class[label].f1 for label in LABEL_ORDER) / n,
    )


def _micro_average(
    matrix: ConfusionMatrix, failure_policy: str
) -> AverageMetrics:
    tp = sum(matrix.cell(label, label.value) for label in LABEL_ORDER)
    if failure_policy == FAILURE_AS_OTHER:
        tp += matrix.cell(RelationLabel.OTHER, PARSE_FAILURE)
        predicted_total = matrix.total()
    else:
        predicted_total = matrix.total() - matrix.parse_failures()
    gold_total = matrix.total()
    precision = _safe_div(tp, predicted_total)
    recall = _safe_div(tp, gold_total)
    return AverageMetrics(precision, recall, _f1(precision, recall))


def _weighted_average(per_class: dict[RelationLabel, ClassMetrics]) -> AverageMetrics:
    total = sum(per_class[label].support for label in LABEL_ORDER)
    if not total:
        return AverageMetrics(0.0, 0.0, 0.0)
    return AverageMetrics(
        precision=sum(
            per_class[label].precision * per_class[label].support for label in LABEL_ORDER
        )
        / total,
        recall=sum(
            per_class[label].recall * per_class[label].support for label in LABEL_ORDER
        )
        / total,
        f1=sum(per_class[label].f1 * per_class[label].support for label in LABEL_ORDER)
        / total,
    )


@dataclass(frozen=True)
class EvaluationReport:
    matrix: ConfusionMatrix
    per_class: dict[RelationLabel, ClassMetrics]
    macro: AverageMetrics
    micro: AverageMetrics
    weighted: AverageMetrics
    record_count: int
    parse_failure_count: int
    failure_policy: str


def evaluate(
    records: Sequence[PredictionRecord], failure_policy: str = FAILURE_AS_OTHER
) -> EvaluationReport:
    matrix = confusion_matrix(records)
    per_class = per_class_metrics(matrix, failure_policy)
    return EvaluationReport(
        matrix=matrix,
        per_class=per_class,
        macro=macro_average(per_class),
        micro=_micro_average(matrix, failure_policy),
        weighted=_weighted_average(per_class),
        record_count=matrix.total(),
        parse_failure_count=matrix.parse_failures(),
        failure_policy=failure_policy,
    )


def report_to_dict(report: EvaluationReport) -> dict:
    return {
        "totals": {
            "records": report.record_count,
            "parse_failures": report.parse_failure_count,
        },
        "failure_policy": report.failure_policy,
        "matrix": {
            gold.value: {
                col: report.matrix.cell(gold, col) for col in PREDICTED_COLUMNS
            }
            for gold in LABEL_ORDER
        },
        "per_class": {
            label.value: {
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "support": m.support,
            }
            for label, m in (
                (label, report.per_class[label]) for label in LABEL_ORDER
            )
        },
        "macro": {
            "precision": report.macro.precision,
            "recall": report.macro.recall,
            "f1": report.macro.f1,
        },
        "micro": {
            "precision": report.micro.precision,
            "recall": report.micro.recall,
            "f1": report.micro.f1,
        },
        "weighted": {
            "precision": report.weighted.precision,
            "recall": report.weighted.recall,
            "f1": report.weighted.f1,
        },
    }


def report_from_dict(data: dict) -> EvaluationReport:
    counts: dict[tuple[str, str], int] = {}
    for gold, row in data["matrix"].items():
        for col, value in row.items():
            if value:
                counts[(gold, col)] = value
    matrix = ConfusionMatrix(counts)
    per_class = {
        parse_relation_label(name): ClassMetrics(
            precision=row["precision"],
            recall=row["recall"],
            f1=row["f1"],
            support=row["support"],
        )
        for name, row in data["per_class"].items()
    }

    def avg(section: dict) -> AverageMetrics:
        return AverageMetrics(section["precision"], section["recall"], section["f1"])

    return EvaluationReport(
        matrix=matrix,
        per_class=per_class,
        macro=avg(data["macro"]),
        micro=avg(data["micro"]),
        weighted=avg(data["weighted"]),
        record_count=data["totals"]["records"],
        parse_failure_count=data["totals"]["parse_failures"],
        failure_policy=data["failure_policy"],
    )


def render_report_json(report: EvaluationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def render_report_markdown(report: EvaluationReport) -> str:
    lines = ["# Evaluation report", ""]
    lines.append(
        f"{report.record_count} predictions, "
        f"{report.parse_failure_count} parse failures "
        f"(failure policy: {report.failure_policy})."
    )
    lines.append("")
    lines.append("## Confusion matrix")
    lines.append("")
    header = ["gold \\ predicted"] + list(PREDICTED_COLUMNS)
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "---|" * len(header))
    for gold in LABEL_ORDER:
        row = [gold.value] + [str(report.matrix.cell(gold, col)) for col in PREDICTED_COLUMNS]
        lines.append("| " + " | ".join(row) + " |")
    lines.append("")
    lines.append("## Metrics")
    lines.append("")
    lines.append("| Metric | AVG | BR | NR | OT | SA |")
    lines.append("|---|---|---|---|---|---|")

    def fmt(value: float) -> str:
        return f"{value:.4f}"

    for metric_name, macro_value, getter in (
        ("F1", report.macro.f1, lambda m: m.f1),
        ("Precision", report.macro.precision, lambda m: m.precision),
        ("Recall", report.macro.recall, lambda m: m.recall),
    ):
        cells = [metric_name, fmt(macro_value)] + [
            fmt(getter(report.per_class[label])) for label in LABEL_ORDER
        ]
        lines.append("| " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(
        "AVG is the unweighted mean over "
        + ", ".join(f"{_ABBREV[label]} ({label.value})" for label in LABEL_ORDER)
        + "."
    )
    return "\n".join(lines) + "\n"


def render_report(report: EvaluationReport, fmt: str) -> str:
    if fmt == "json":
        return render_report_json(report)
    if fmt == "markdown":
        return render_report_markdown(report)
    raise ValueError(f"unknown report format: {fmt!r}")


def prediction_to_dict(record: PredictionRecord) -> dict:
    return {
        "pair_id": record.pair_id,
        "gold": record.gold.value,
        "predicted": (
            record.predicted.value if record.predicted is not None else PARSE_FAILURE
        ),
    }


def prediction_from_dict(row: dict) -> PredictionRecord:
    predicted = row["predicted"]
    return PredictionRecord(
        pair_id=row["pair_id"],
        gold=parse_relation_label(row["gold"]),
        predicted=None if predicted == PARSE_FAILURE else parse_relation_label(predicted),
    )


def write_predictions(path: Path | str, records: Iterable[PredictionRecord]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(prediction_to_dict(record), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_predictions(path: Path | str) -> list[PredictionRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(prediction_from_dict(json.loads(line)))
    return records
