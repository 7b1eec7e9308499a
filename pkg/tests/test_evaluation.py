from __future__ import annotations

import json
import random

import pytest

from topicrel.evaluation import (
    FAILURE_AS_OTHER,
    FAILURE_OWN_COLUMN,
    DuplicatePairId,
    PredictionRecord,
    confusion_matrix,
    evaluate,
    read_predictions,
    render_report_json,
    render_report_markdown,
    report_from_dict,
    report_to_dict,
    write_predictions,
)
from topicrel.labels import LABEL_ORDER, PARSE_FAILURE, RelationLabel


def _records(rows):
    return [
        PredictionRecord(pair_id=f"p{i}", gold=gold, predicted=pred)
        for i, (gold, pred) in enumerate(rows)
    ]


def _random_records(rng: random.Random, n: int) -> list[PredictionRecord]:
    golds = list(LABEL_ORDER)
    preds = list(LABEL_ORDER) + [None]
    return _records([(rng.choice(golds), rng.choice(preds)) for _ in range(n)])


def _naive_scores(records, failure_policy):
    """Recount precision/recall/f1 from scratch, one class at a time."""

    def effective(predicted):
        if predicted is not None:
            return predicted
        if failure_policy == FAILURE_AS_OTHER:
            return RelationLabel.OTHER
        return PARSE_FAILURE

    per_class = {}
    for cls in LABEL_ORDER:
        tp = sum(1 for r in records if r.gold is cls and effective(r.predicted) is cls)
        fp = sum(1 for r in records if r.gold is not cls and effective(r.predicted) is cls)
        fn = sum(1 for r in records if r.gold is cls and effective(r.predicted) is not cls)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[cls] = (precision, recall, f1)
    macro = tuple(
        sum(scores[i] for scores in per_class.values()) / len(per_class) for i in range(3)
    )
    return per_class, macro


def test_matrix_counts_and_failure_column():
    records = _records(
        [
            (RelationLabel.BROADER, RelationLabel.BROADER),
            (RelationLabel.BROADER, RelationLabel.SAME_AS),
            (RelationLabel.NARROWER, None),
            (RelationLabel.OTHER, RelationLabel.OTHER),
        ]
    )
    matrix = confusion_matrix(records)
    assert matrix.cell(RelationLabel.BROADER, RelationLabel.BROADER.value) == 1
    assert matrix.cell(RelationLabel.BROADER, RelationLabel.SAME_AS.value) == 1
    assert matrix.cell(RelationLabel.NARROWER, PARSE_FAILURE) == 1
    assert matrix.row_sum(RelationLabel.BROADER) == 2
    assert matrix.total() == 4
    assert matrix.parse_failures() == 1


def test_duplicate_pair_ids_are_rejected():
    records = [
        PredictionRecord(pair_id="p0", gold=RelationLabel.OTHER, predicted=RelationLabel.OTHER),
        PredictionRecord(pair_id="p0", gold=RelationLabel.OTHER, predicted=None),
    ]
    with pytest.raises(DuplicatePairId):
        evaluate(records)


def test_perfect_predictions_score_one():
    records = _records([(label, label) for label in LABEL_ORDER for _ in range(3)])
    report = evaluate(records)
    assert report.macro.f1 == 1.0
    assert report.micro.f1 == 1.0
    for cls in LABEL_ORDER:
        assert report.per_class[cls].f1 == 1.0
        assert report.per_class[cls].support == 3


def test_always_other_on_a_balanced_set_hits_exact_scores():
    records = _records(
        [(label, RelationLabel.OTHER) for label in LABEL_ORDER for _ in range(5)]
    )
    report = evaluate(records)
    other = report.per_class[RelationLabel.OTHER]
    assert other.precision == 0.25
    assert other.recall == 1.0
    assert other.f1 == 0.4
    assert report.macro.f1 == 0.1
    for cls in (RelationLabel.BROADER, RelationLabel.NARROWER, RelationLabel.SAME_AS):
        assert report.per_class[cls].f1 == 0.0


@pytest.mark.parametrize("policy", [FAILURE_AS_OTHER, FAILURE_OWN_COLUMN])
def test_metrics_match_a_naive_recount(policy):
    rng = random.Random(2024)
    for _ in range(100):
        records = _random_records(rng, rng.randint(1, 200))
        report = evaluate(records, failure_policy=policy)
        per_class, macro = _naive_scores(records, policy)
        for cls in LABEL_ORDER:
            got = report.per_class[cls]
            want = per_class[cls]
            assert abs(got.precision - want[0]) <= 1e-12, cls
            assert abs(got.recall - want[1]) <= 1e-12, cls
            assert abs(got.f1 - want[2]) <= 1e-12, cls
        assert abs(report.macro.precision - macro[0]) <= 1e-12
        assert abs(report.macro.recall - macro[1]) <= 1e-12
        assert abs(report.macro.f1 - macro[2]) <= 1e-12


def test_failure_policies_differ_only_when_failures_exist():
    rows = [
        (RelationLabel.OTHER, None),
        (RelationLabel.OTHER, RelationLabel.OTHER),
        (RelationLabel.BROADER, RelationLabel.BROADER),
    ]
    as_other = evaluate(_records(rows), failure_policy=FAILURE_AS_OTHER)
    own_column = evaluate(_records(rows), failure_policy=FAILURE_OWN_COLUMN)
    # folding the failure into "other" credits the other class with a hit
    assert as_other.per_class[RelationLabel.OTHER].recall == 1.0
    assert own_column.per_class[RelationLabel.OTHER].recall == 0.5
    clean = [(g, p) for g, p in rows if p is not None]
    lhs = report_to_dict(evaluate(_records(clean), failure_policy=FAILURE_AS_OTHER))
    rhs = report_to_dict(evaluate(_records(clean), failure_policy=FAILURE_OWN_COLUMN))
    lhs.pop("failure_policy")
    rhs.pop("failure_policy")
    assert lhs == rhs


def test_micro_average_is_accuracy_under_the_other_policy():
    rng = random.Random(7)
    records = _random_records(rng, 150)
    report = evaluate(records, failure_policy=FAILURE_AS_OTHER)

    def effective(predicted):
        return predicted if predicted is not None else RelationLabel.OTHER

    accuracy = sum(1 for r in records if effective(r.predicted) is r.gold) / len(records)
    assert abs(report.micro.f1 - accuracy) <= 1e-12


def test_weighted_equals_macro_on_equal_support():
    records = _records(
        [
            (label, pred)
            for label in LABEL_ORDER
            for pred in (label, RelationLabel.OTHER, label)
        ]
    )
    report = evaluate(records)
    assert abs(report.weighted.f1 - report.macro.f1) <= 1e-12


def test_report_dict_round_trip():
    rng = random.Random(99)
    records = _random_records(rng, 80)
    report = evaluate(records)
    data = report_to_dict(report)
    assert data["totals"]["records"] == 80
    assert data["failure_policy"] == FAILURE_AS_OTHER
    restored = report_from_dict(json.loads(json.dumps(data)))
    assert report_to_dict(restored) == data


def test_report_json_is_stable():
    records = _records([(RelationLabel.BROADER, RelationLabel.BROADER)])
    report = evaluate(records)
    text = render_report_json(report)
    assert text.endswith("\n")
    assert json.loads(text) == report_to_dict(report)
    assert text == render_report_json(report_from_dict(json.loads(text)))


def test_markdown_report_layout():
    records = _records(
        [
            (RelationLabel.BROADER, RelationLabel.BROADER),
            (RelationLabel.NARROWER, None),
            (RelationLabel.SAME_AS, RelationLabel.SAME_AS),
            (RelationLabel.OTHER, RelationLabel.BROADER),
        ]
    )
    text = render_report_markdown(evaluate(records))
    assert text.startswith("# Evaluation report")
    assert "| gold \\ predicted |" in text
    assert "parse-failure" in text
    assert "| Metric | AVG | BR | NR | OT | SA |" in text
    for row in ("| F1 |", "| Precision |", "| Recall |"):
        assert row in text
    # four decimal places on every metric cell
    assert "1.0000" in text


def test_prediction_file_round_trip(tmp_path):
    records = _records(
        [
            (RelationLabel.BROADER, RelationLabel.NARROWER),
            (RelationLabel.OTHER, None),
        ]
    )
    path = tmp_path / "demo.predictions.jsonl"
    assert write_predictions(path, records) == 2
    restored = read_predictions(path)
    assert restored == records
    raw = [json.loads(line) for line in path.read_text().splitlines()]
    assert raw[1]["predicted"] == PARSE_FAILURE
