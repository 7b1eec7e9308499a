"""Seeded samplers that turn a ConceptGraph into labeled topic pairs.

All samplers are pure functions of (graph, parameters, seed): iteration
is over sorted views, and randomness comes only from the seed.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass

from .graph import MESH, SKOS_CORE, ConceptGraph
from .labels import RelationLabel
from .pairs import (
    PROVENANCE_ADJUDICATED,
    PROVENANCE_HIERARCHY,
    PROVENANCE_NEGATIVE,
    PROVENANCE_RELATED,
    CandidatePair,
    LabeledPair,
    make_pair_id,
)

logger = logging.getLogger(__name__)


class InsufficientEdges(ValueError):
    def __init__(self, needed: int, available: int):
        super().__init__(f"need {needed} usable hierarchy edges, have {available}")
        self.needed = needed
        self.available = available


class ExhaustedCandidates(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"gave up after {attempts} rejected draws")
        self.attempts = attempts


@dataclass(frozen=True)
class ExclusionPolicy:
    """What disqualifies an ordered concept pair from the `other` label.

    Identical concepts, direct hierarchy or related edges, and shared
    surface forms are always excluded; ``transitive`` additionally
    excludes ancestor/descendant pairs under the hierarchy closure.
    """

    transitive: bool = True
    max_attempts_per_pair: int = 100


def sample_hierarchical(
    graph: ConceptGraph, n_per_label: int, seed: int, *, source: str
) -> list[LabeledPair]:
    """Draw n_per_label broader and n_per_label narrower pairs from
    disjoint hierarchy edges.

    For an edge (child, parent): a broader draw yields
    (parent_label, child_label, broader), a narrower draw yields
    (child_label, parent_label, narrower).
    """
    eligible = sorted(
        e for e in graph.hierarchy_edges if graph.pref(e[0]) != graph.pref(e[1])
    )
    needed = 2 * n_per_label
    if len(eligible) < needed:
        raise InsufficientEdges(needed, len(eligible))

    rng = random.Random(seed)
    rng.shuffle(eligible)

    pairs: list[LabeledPair] = []
    seen: set[tuple[str, str, str]] = set()

    def take(count: int, label: RelationLabel, cursor: int) -> int:
        taken = 0
        while taken < count:
            if cursor >= len(eligible):
                raise InsufficientEdges(needed, len(eligible))
            child, parent = eligible[cursor]
            cursor += 1
            if label is RelationLabel.BROADER:
                topic_a, topic_b = graph.pref(parent), graph.pref(child)
            else:
                topic_a, topic_b = graph.pref(child), graph.pref(parent)
            key = (topic_a, topic_b, label.value)
            if key in seen:
                continue
            seen.add(key)
            pairs.append(
                LabeledPair(
                    pair_id=make_pair_id(source, "hier", topic_a, topic_b, label.value),
                    topic_a=topic_a,
                    topic_b=topic_b,
                    label=label,
                    source=source,
                    provenance=PROVENANCE_HIERARCHY,
                )
            )
            taken += 1
        return cursor

    cursor = take(n_per_label, RelationLabel.BROADER, 0)
    take(n_per_label, RelationLabel.NARROWER, cursor)
    return pairs


def _surface_forms(graph: ConceptGraph) -> dict[str, frozenset[str]]:
    return {
        cid: frozenset(
            {c.pref_label.lower()} | {a.lower() for a in c.alt_labels}
        )
        for cid, c in graph.concepts.items()
    }


def sample_other(
    graph: ConceptGraph,
    n: int,
    seed: int,
    *,
    source: str,
    policy: ExclusionPolicy | None = None,
) -> list[LabeledPair]:
    """Draw n ordered pairs with no recognizable semantic link, by seeded
    rejection sampling over concept pairs. Raises ExhaustedCandidates when
    max_attempts_per_pair * n draws fail to produce n accepted pairs."""
    policy = policy or ExclusionPolicy()
    ids = sorted(graph.concepts)
    if n == 0:
        return []
    if len(ids) < 2:
        raise ExhaustedCandidates(0)

    forms = _surface_forms(graph)
    linked: set[tuple[str, str]] = set()
    for a, b in graph.hierarchy_edges:
        linked.add((a, b))
        linked.add((b, a))
    for a, b in graph.related_edges:
        linked.add((a, b))
        linked.add((b, a))

    parents_of: dict[str, list[str]] = {}
    for a, b in graph.hierarchy_edges:
        parents_of.setdefault(a, []).append(b)
    ancestor_cache: dict[str, frozenset[str]] = {}

    def ancestors(cid: str) -> frozenset[str]:
        cached = ancestor_cache.get(cid)
        if cached is not None:
            return cached
        found: set[str] = set()
        todo = list(parents_of.get(cid, ()))
        while todo:
            node = todo.pop()
            if node in found:
                continue
            found.add(node)
            todo.extend(parents_of.get(node, ()))
        result = frozenset(found)
        ancestor_cache[cid] = result
        return result

    rng = random.Random(seed)
    max_attempts = policy.max_attempts_per_pair * n
    attempts = 0
    out: list[LabeledPair] = []
    seen: set[tuple[str, str]] = set()
    while len(out) < n:
        if attempts >= max_attempts:
            raise ExhaustedCandidates(attempts)
        attempts += 1
        a = rng.choice(ids)
        b = rng.choice(ids)
        if a == b or (a, b) in linked:
            continue
        if forms[a] & forms[b]:
            continue
        if policy.transitive and (b in ancestors(a) or a in ancestors(b)):
            continue
        topic_a, topic_b = graph.pref(a), graph.pref(b)
        if (topic_a, topic_b) in seen:
            continue
        seen.add((topic_a, topic_b))
        out.append(
            LabeledPair(
                pair_id=make_pair_id(
                    source, "other", topic_a, topic_b, RelationLabel.OTHER.value
                ),
                topic_a=topic_a,
                topic_b=topic_b,
                label=RelationLabel.OTHER,
                source=source,
                provenance=PROVENANCE_NEGATIVE,
            )
        )
    return out


def extract_sameas_candidates(graph: ConceptGraph, *, source: str) -> list[CandidatePair]:
    """Candidate same-as pairs for review.

    skos-core: one candidate per (concept, alt_label); mesh: one per
    related edge, using preferred labels on both ends.
    """
    candidates: list[CandidatePair] = []
    skipped = 0
    if graph.dialect == SKOS_CORE:
        for cid in sorted(graph.concepts):
            concept = graph.concepts[cid]
            for alt in sorted(concept.alt_labels):
                candidates.append(
                    CandidatePair(
                        pair_id=make_pair_id(
                            source, "sameas", concept.pref_label, alt, "same-as"
                        ),
                        topic_a=concept.pref_label,
                        topic_b=alt,
                        source=source,
                        context=f"'{alt}' is an alternative label of '{concept.pref_label}' ({cid})",
                    )
                )
    elif graph.dialect == MESH:
        for a, b in sorted(graph.related_edges):
            topic_a, topic_b = graph.pref(a), graph.pref(b)
            if topic_a == topic_b:
                skipped += 1
                continue
            candidates.append(
                CandidatePair(
                    pair_id=make_pair_id(source, "sameas", topic_a, topic_b, "same-as"),
                    topic_a=topic_a,
                    topic_b=topic_b,
                    source=source,
                    context=f"related concepts {a} and {b}",
                )
            )
    else:
        raise ValueError(f"unknown dialect: {graph.dialect!r}")
    if skipped:
        logger.warning("skipped %d related edge(s) with identical labels", skipped)
    return candidates


def accept_candidates(
    candidates: list[CandidatePair], *, provenance: str = PROVENANCE_RELATED
) -> list[LabeledPair]:
    """Turn reviewed (or auto-accepted) candidates into same-as pairs."""
    if provenance not in (PROVENANCE_RELATED, PROVENANCE_ADJUDICATED):
        raise ValueError(f"unexpected same-as provenance: {provenance!r}")
    return [
        LabeledPair(
            pair_id=c.pair_id,
            topic_a=c.topic_a,
            topic_b=c.topic_b,
            label=RelationLabel.SAME_AS,
            source=c.source,
            provenance=provenance,
        )
        for c in candidates
    ]
