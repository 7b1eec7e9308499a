"""Relation label vocabulary shared across the toolkit.

A pair (topic_a, topic_b) is labeled ``broader`` when topic_a subsumes
topic_b, ``narrower`` when topic_a is subsumed by topic_b, ``same-as``
when the two are interchangeable, and ``other`` when none of those hold.
"""
from __future__ import annotations

from enum import Enum


class RelationLabel(str, Enum):
    BROADER = "broader"
    NARROWER = "narrower"
    SAME_AS = "same-as"
    OTHER = "other"

    def __str__(self) -> str:
        return self.value


# Column order used in reports: broader, narrower, other, same-as.
LABEL_ORDER = (
    RelationLabel.BROADER,
    RelationLabel.NARROWER,
    RelationLabel.OTHER,
    RelationLabel.SAME_AS,
)

# Serialized stand-in for a model response that yielded no usable label.
# It is a value in outcome and prediction files, never a RelationLabel.
PARSE_FAILURE = "parse-failure"


def parse_relation_label(text: str) -> RelationLabel:
    """Strict lookup of a serialized label; raises ValueError on anything else."""
    try:
        return RelationLabel(text)
    except ValueError:
        raise ValueError(f"unknown relation label: {text!r}") from None


def invert_label(label: RelationLabel) -> RelationLabel:
    """Label of the swapped pair: broader and narrower trade places,
    same-as and other are symmetric."""
    if label is RelationLabel.BROADER:
        return RelationLabel.NARROWER
    if label is RelationLabel.NARROWER:
        return RelationLabel.BROADER
    return label
