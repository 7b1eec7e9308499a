"""Labeled topic pairs, adjudication candidates, and their JSONL forms."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .labels import RelationLabel, parse_relation_label

PROVENANCE_HIERARCHY = "hierarchy-edge"
PROVENANCE_ADJUDICATED = "adjudicated-candidate"
PROVENANCE_RELATED = "related-edge"
PROVENANCE_NEGATIVE = "random-negative"

PROVENANCES = (
    PROVENANCE_HIERARCHY,
    PROVENANCE_ADJUDICATED,
    PROVENANCE_RELATED,
    PROVENANCE_NEGATIVE,
)


@dataclass(frozen=True)
class LabeledPair:
    pair_id: str
    topic_a: str
    topic_b: str
    label: RelationLabel
    source: str
    provenance: str

    def __post_init__(self) -> None:
        if self.topic_a == self.topic_b:
            raise ValueError(f"pair {self.pair_id}: identical topics {self.topic_a!r}")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"pair {self.pair_id}: unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class CandidatePair:
    """A possible same-as pair awaiting review. Status is not stored here;
    it is always derived from the adjudication verdict log."""

    pair_id: str
    topic_a: str
    topic_b: str
    source: str
    context: str

    def __post_init__(self) -> None:
        if self.topic_a == self.topic_b:
            raise ValueError(f"candidate {self.pair_id}: identical topics")


def make_pair_id(source: str, kind: str, topic_a: str, topic_b: str, label: str) -> str:
    """Stable content-derived identifier, unique per (topics, label) within
    a source and safe to merge across sources thanks to the name prefix."""
    digest = hashlib.sha1(
        "\x1f".join((topic_a, topic_b, label)).encode("utf-8")
    ).hexdigest()[:12]
    return f"{source}:{kind}:{digest}"


def pair_to_dict(pair: LabeledPair) -> dict:
    return {
        "pair_id": pair.pair_id,
        "topic_a": pair.topic_a,
        "topic_b": pair.topic_b,
        "label": pair.label.value,
        "source": pair.source,
        "provenance": pair.provenance,
    }


def pair_from_dict(row: dict) -> LabeledPair:
    return LabeledPair(
        pair_id=row["pair_id"],
        topic_a=row["topic_a"],
        topic_b=row["topic_b"],
        label=parse_relation_label(row["label"]),
        source=row["source"],
        provenance=row["provenance"],
    )


def candidate_to_dict(candidate: CandidatePair) -> dict:
    return {
        "pair_id": candidate.pair_id,
        "topic_a": candidate.topic_a,
        "topic_b": candidate.topic_b,
        "source": candidate.source,
        "context": candidate.context,
    }


def candidate_from_dict(row: dict) -> CandidatePair:
    return CandidatePair(
        pair_id=row["pair_id"],
        topic_a=row["topic_a"],
        topic_b=row["topic_b"],
        source=row["source"],
        context=row["context"],
    )


def write_jsonl(path: Path | str, rows: Iterable[dict]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False) + "\n")
            count += 1
    return count


def read_jsonl(path: Path | str) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    return rows


def write_pairs(path: Path | str, pairs: Iterable[LabeledPair]) -> int:
    return write_jsonl(path, (pair_to_dict(p) for p in pairs))


def read_pairs(path: Path | str) -> list[LabeledPair]:
    return [pair_from_dict(row) for row in read_jsonl(path)]


def write_candidates(path: Path | str, candidates: Iterable[CandidatePair]) -> int:
    return write_jsonl(path, (candidate_to_dict(c) for c in candidates))


def read_candidates(path: Path | str) -> list[CandidatePair]:
    return [candidate_from_dict(row) for row in read_jsonl(path)]
