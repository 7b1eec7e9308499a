"""Deterministic reconciliation of the two directions of a bidirectional run.

The raw label from the swapped presentation is first normalized into the
original orientation via invert_label; the rules below then compare the
two orientation-normalized opinions. ``None`` stands for a parse failure.
"""
from __future__ import annotations

from .labels import RelationLabel, invert_label

RULE_SINGLE_PARSE = "single-parse"
RULE_DOUBLE_FAILURE = "double-failure"
RULE_AGREEMENT = "agreement"
RULE_OTHER_OVERRIDE = "other-override"
RULE_HIERARCHY_CONTRADICTION = "hierarchy-contradiction"
RULE_HIERARCHY_OVER_EQUIVALENCE = "hierarchy-over-equivalence"
RULE_NOT_APPLICABLE = "not-applicable"

CONFIDENCE_AGREED = "agreed"
CONFIDENCE_RESOLVED = "resolved"
CONFIDENCE_CONTRADICTION = "contradiction"


def referee(
    label_ab: RelationLabel | None, label_ba: RelationLabel | None
) -> tuple[RelationLabel, str, str]:
    """Resolve (label from the (A,B) run, label from the (B,A) run) into
    a final label for (A,B) plus the rule that fired and a confidence flag.

    Exactly one rule applies to every input combination, and a
    contradiction always resolves to ``other``.
    """
    p = label_ab
    q = invert_label(label_ba) if label_ba is not None else None

    if (p is None) != (q is None):
        survivor = p if p is not None else q
        assert survivor is not None
        return survivor, RULE_SINGLE_PARSE, CONFIDENCE_RESOLVED
    if p is None and q is None:
        return RelationLabel.OTHER, RULE_DOUBLE_FAILURE, CONFIDENCE_CONTRADICTION
    assert p is not None and q is not None
    if p == q:
        return p, RULE_AGREEMENT, CONFIDENCE_AGREED
    opinions = {p, q}
    if RelationLabel.OTHER in opinions:
        survivor = q if p is RelationLabel.OTHER else p
        return survivor, RULE_OTHER_OVERRIDE, CONFIDENCE_RESOLVED
    if opinions == {RelationLabel.BROADER, RelationLabel.NARROWER}:
        return (
            RelationLabel.OTHER,
            RULE_HIERARCHY_CONTRADICTION,
            CONFIDENCE_CONTRADICTION,
        )
    # Remaining: same-as paired with one hierarchical opinion.
    survivor = (
        RelationLabel.BROADER
        if RelationLabel.BROADER in opinions
        else RelationLabel.NARROWER
    )
    return survivor, RULE_HIERARCHY_OVER_EQUIVALENCE, CONFIDENCE_RESOLVED
