"""Classification strategies over an inference client.

Every classified pair produces a ClassificationOutcome that retains the
raw response texts for audit. Request tags follow the grammar
``<pair_id>#<ab|ba>[#s1|#s2]`` so mocks and logs can identify the
direction and stage of each call.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence, TextIO

from .inference import InferenceClient, InferenceError
from .labels import PARSE_FAILURE, RelationLabel, parse_relation_label
from .pairs import LabeledPair
from .prompts import TemplateSet, parse_label, render
from .referee import CONFIDENCE_AGREED, RULE_NOT_APPLICABLE, referee

STRATEGY_STANDARD = "standard"
STRATEGY_BIDIRECTIONAL = "bidirectional-cot"
STRATEGIES = (STRATEGY_STANDARD, STRATEGY_BIDIRECTIONAL)


@dataclass(frozen=True)
class DirectionRun:
    """Raw material from one presentation order: response texts in call
    order, the parsed label (None on parse failure), and any transport
    error that cut the direction short."""

    responses: tuple[str, ...]
    parsed: RelationLabel | None
    error: str | None = None


@dataclass(frozen=True)
class ClassificationOutcome:
    pair_id: str
    strategy: str
    final_label: RelationLabel | None
    run_ab: DirectionRun
    run_ba: DirectionRun | None
    referee_rule: str
    confidence: str


def run_standard(
    pair_id: str,
    topic_a: str,
    topic_b: str,
    client: InferenceClient,
    templates: TemplateSet,
) -> ClassificationOutcome:
    """Single prompt, single parse; no referee involved."""
    prompt = render(templates.standard, topic_a, topic_b)
    try:
        response = client.generate(prompt, request_tag=f"{pair_id}#ab")
    except InferenceError as exc:
        run = DirectionRun(responses=(), parsed=None, error=str(exc))
    else:
        run = DirectionRun(responses=(response,), parsed=parse_label(response))
    return ClassificationOutcome(
        pair_id=pair_id,
        strategy=STRATEGY_STANDARD,
        final_label=run.parsed,
        run_ab=run,
        run_ba=None,
        referee_rule=RULE_NOT_APPLICABLE,
        confidence=CONFIDENCE_AGREED,
    )


def _cot_direction(
    pair_id: str,
    first: str,
    second: str,
    direction: str,
    client: InferenceClient,
    templates: TemplateSet,
) -> DirectionRun:
    stage1_prompt = render(templates.cot_stage1, first, second)
    try:
        stage1 = client.generate(stage1_prompt, request_tag=f"{pair_id}#{direction}#s1")
    except InferenceError as exc:
        return DirectionRun(responses=(), parsed=None, error=str(exc))
    stage2_prompt = render(templates.cot_stage2, first, second, stage1_response=stage1)
    try:
        stage2 = client.generate(stage2_prompt, request_tag=f"{pair_id}#{direction}#s2")
    except InferenceError as exc:
        return DirectionRun(responses=(stage1,), parsed=None, error=str(exc))
    return DirectionRun(responses=(stage1, stage2), parsed=parse_label(stage2))


def run_bidirectional_cot(
    pair_id: str,
    topic_a: str,
    topic_b: str,
    client: InferenceClient,
    templates: TemplateSet,
) -> ClassificationOutcome:
    """Two-stage chain-of-thought in both presentation orders, reconciled
    by the referee. Stages within a direction are sequential; a direction
    that fails or does not parse enters the referee as a parse failure."""
    run_ab = _cot_direction(pair_id, topic_a, topic_b, "ab", client, templates)
    run_ba = _cot_direction(pair_id, topic_b, topic_a, "ba", client, templates)
    final, rule, confidence = referee(run_ab.parsed, run_ba.parsed)
    return ClassificationOutcome(
        pair_id=pair_id,
        strategy=STRATEGY_BIDIRECTIONAL,
        final_label=final,
        run_ab=run_ab,
        run_ba=run_ba,
        referee_rule=rule,
        confidence=confidence,
    )


def classify_pair(
    pair: LabeledPair,
    client: InferenceClient,
    strategy: str,
    templates: TemplateSet,
) -> ClassificationOutcome:
    if strategy == STRATEGY_STANDARD:
        return run_standard(pair.pair_id, pair.topic_a, pair.topic_b, client, templates)
    if strategy == STRATEGY_BIDIRECTIONAL:
        return run_bidirectional_cot(
            pair.pair_id, pair.topic_a, pair.topic_b, client, templates
        )
    raise ValueError(f"unknown strategy: {strategy!r}")


def classify_pairs(
    pairs: Sequence[LabeledPair],
    client: InferenceClient,
    strategy: str,
    templates: TemplateSet,
    on_outcome: Callable[[ClassificationOutcome], None] | None = None,
) -> Iterator[ClassificationOutcome]:
    """Classify pairs concurrently (bounded by the client's in-flight
    limit), yielding outcomes in input order as they complete."""
    with ThreadPoolExecutor(max_workers=client.config.max_in_flight) as pool:
        for outcome in pool.map(
            lambda p: classify_pair(p, client, strategy, templates), pairs
        ):
            if on_outcome is not None:
                on_outcome(outcome)
            yield outcome


def _direction_to_dict(run: DirectionRun | None) -> dict | None:
    if run is None:
        return None
    return {
        "responses": list(run.responses),
        "parsed": run.parsed.value if run.parsed is not None else PARSE_FAILURE,
        "error": run.error,
    }


def _direction_from_dict(data: dict | None) -> DirectionRun | None:
    if data is None:
        return None
    parsed = data["parsed"]
    return DirectionRun(
        responses=tuple(data["responses"]),
        parsed=None if parsed == PARSE_FAILURE else parse_relation_label(parsed),
        error=data.get("error"),
    )


def outcome_to_dict(outcome: ClassificationOutcome) -> dict:
    return {
        "pair_id": outcome.pair_id,
        "strategy": outcome.strategy,
        "final_label": (
            outcome.final_label.value if outcome.final_label is not None else PARSE_FAILURE
        ),
        "run_ab": _direction_to_dict(outcome.run_ab),
        "run_ba": _direction_to_dict(outcome.run_ba),
        "referee_rule": outcome.referee_rule,
        "confidence": outcome.confidence,
    }


def outcome_from_dict(data: dict) -> ClassificationOutcome:
    final = data["final_label"]
    run_ab = _direction_from_dict(data["run_ab"])
    if run_ab is None:
        raise ValueError(f"outcome {data['pair_id']} is missing run_ab")
    return ClassificationOutcome(
        pair_id=data["pair_id"],
        strategy=data["strategy"],
        final_label=None if final == PARSE_FAILURE else parse_relation_label(final),
        run_ab=run_ab,
        run_ba=_direction_from_dict(data["run_ba"]),
        referee_rule=data["referee_rule"],
        confidence=data["confidence"],
    )


def write_outcome_line(handle: TextIO, outcome: ClassificationOutcome) -> None:
    """One outcome per line, flushed immediately so an interrupted run
    leaves a valid JSONL prefix behind."""
    handle.write(json.dumps(outcome_to_dict(outcome), ensure_ascii=False) + "\n")
    handle.flush()


def write_outcomes(path: Path | str, outcomes: Iterable[ClassificationOutcome]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for outcome in outcomes:
            write_outcome_line(handle, outcome)
            count += 1
    return count


def read_outcomes(path: Path | str) -> list[ClassificationOutcome]:
    outcomes = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                outcomes.append(outcome_from_dict(json.loads(line)))
    return outcomes
