"""Assemble accepted relations into a cycle-free hierarchy with synonym classes.

Same-as pairs are merged first into equivalence classes (union-find,
lexicographically smallest member as representative). Hierarchy pairs are
then applied to class representatives in ascending pair_id order; an edge
that would connect a class to itself, repeat an existing edge, or close a
cycle is rejected with a reason instead of mutating the structure.
"""
from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .labels import RelationLabel
from .ntriples import Triple, write_ntriples
from .graph import SKOS_NS
from .pairs import LabeledPair

REASON_CYCLE = "cycle"
REASON_DUPLICATE = "duplicate"
REASON_INTRA_CLASS = "intra-class"

EQUIVALENCE_MERGE = "merge"
EQUIVALENCE_EXACT_MATCH = "exact-match"

SKOS_EXACT_MATCH = SKOS_NS + "exactMatch"


class SlugCollision(ValueError):
    def __init__(self, label_a: str, label_b: str, slug: str):
        super().__init__(
            f"labels {label_a!r} and {label_b!r} both slugify to {slug!r}"
        )
        self.label_a = label_a
        self.label_b = label_b
        self.slug = slug


@dataclass(frozen=True)
class RejectedPair:
    pair: LabeledPair
    reason: str


@dataclass
class AssembledOntology:
    concepts: frozenset[str]
    hierarchy: frozenset[tuple[str, str]]  # (child, parent) over representatives
    equivalences: tuple[frozenset[str], ...]
    rejected: tuple[RejectedPair, ...]
    _rep: dict[str, str] = field(default_factory=dict, repr=False)

    def representative(self, label: str) -> str:
        return self._rep.get(label, label)


def _reachable(adjacency: dict[str, set[str]], start: str, goal: str) -> bool:
    if start == goal:
        return True
    seen = {start}
    todo = deque([start])
    while todo:
        node = todo.popleft()
        for nxt in adjacency.get(node, ()):
            if nxt == goal:
                return True
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False


def assemble(pairs: Sequence[LabeledPair]) -> AssembledOntology:
    """Build the ontology from labeled pairs. ``other`` pairs are ignored;
    anything outside the four-label vocabulary must be filtered upstream."""
    same_as = sorted(
        (p for p in pairs if p.label is RelationLabel.SAME_AS), key=lambda p: p.pair_id
    )
    hierarchical = sorted(
        (
            p
            for p in pairs
            if p.label in (RelationLabel.BROADER, RelationLabel.NARROWER)
        ),
        key=lambda p: p.pair_id,
    )

    parent_of: dict[str, str] = {}

    def find(label: str) -> str:
        root = label
        while parent_of.get(root, root) != root:
            root = parent_of[root]
        while parent_of.get(label, label) != label:
            parent_of[label], label = root, parent_of[label]
        return root

    mentioned: set[str] = set()
    for pair in same_as:
        mentioned.update((pair.topic_a, pair.topic_b))
        root_a, root_b = find(pair.topic_a), find(pair.topic_b)
        if root_a != root_b:
            parent_of[max(root_a, root_b)] = min(root_a, root_b)

    members: dict[str, set[str]] = {}
    for label in mentioned:
        members.setdefault(find(label), set()).add(label)
    rep_map = {label: find(label) for label in mentioned}
    equivalences = tuple(
        frozenset(members[rep]) for rep in sorted(members)
    )

    def rep(label: str) -> str:
        return rep_map.get(label, label)

    edges: set[tuple[str, str]] = set()
    children_to_parents: dict[str, set[str]] = {}
    rejected: list[RejectedPair] = []
    accepted: list[LabeledPair] = []
    for pair in hierarchical:
        if pair.label is RelationLabel.BROADER:
            child, parent = pair.topic_b, pair.topic_a
        else:
            child, parent = pair.topic_a, pair.topic_b
        child_rep, parent_rep = rep(child), rep(parent)
        if child_rep == parent_rep:
            rejected.append(RejectedPair(pair, REASON_INTRA_CLASS))
            continue
        if (child_rep, parent_rep) in edges:
            rejected.append(RejectedPair(pair, REASON_DUPLICATE))
            continue
        if _reachable(children_to_parents, parent_rep, child_rep):
            rejected.append(RejectedPair(pair, REASON_CYCLE))
            continue
        edges.add((child_rep, parent_rep))
        children_to_parents.setdefault(child_rep, set()).add(parent_rep)
        accepted.append(pair)

    concepts: set[str] = set(mentioned)
    for pair in accepted:
        concepts.update((pair.topic_a, pair.topic_b))

    return AssembledOntology(
        concepts=frozenset(concepts),
        hierarchy=frozenset(edges),
        equivalences=equivalences,
        rejected=tuple(rejected),
        _rep=rep_map,
    )


def transitive_reduction(ontology: AssembledOntology) -> AssembledOntology:
    """Drop every hierarchy edge implied by a longer path. The input is a
    DAG by construction, so the reduction is unique and reachability is
    preserved exactly."""
    adjacency: dict[str, set[str]] = {}
    for child, parent in ontology.hierarchy:
        adjacency.setdefault(child, set()).add(parent)

    kept = set(ontology.hierarchy)
    for child, parent in sorted(ontology.hierarchy):
        adjacency[child].discard(parent)
        if _reachable(adjacency, child, parent):
            kept.discard((child, parent))
        else:
            adjacency[child].add(parent)

    return AssembledOntology(
        concepts=ontology.concepts,
        hierarchy=frozenset(kept),
        equivalences=ontology.equivalences,
        rejected=ontology.rejected,
        _rep=dict(ontology._rep),
    )


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def slugify(label: str) -> str:
    slug = _SLUG_RE.sub("-", label.lower()).strip("-")
    return slug or "concept"


def emit_skos(
    ontology: AssembledOntology,
    base_iri: str,
    equivalence: str = EQUIVALENCE_MERGE,
) -> str:
    """Serialize the ontology as sorted skos-core N-Triples.

    merge: one IRI per representative, class members as altLabel
    literals; re-ingesting the output reproduces the structure.
    exact-match: every class member keeps its own IRI and prefLabel, tied
    to the representative via skos:exactMatch (for consumers that must
    not merge near-synonyms; this form does not round-trip).
    """
    if equivalence not in (EQUIVALENCE_MERGE, EQUIVALENCE_EXACT_MATCH):
        raise ValueError(f"unknown equivalence style: {equivalence!r}")

    reps = sorted({ontology.representative(c) for c in ontology.concepts})
    if equivalence == EQUIVALENCE_MERGE:
        named = reps
    else:
        named = sorted(ontology.concepts)

    slugs: dict[str, str] = {}
    iris: dict[str, str] = {}
    for label in named:
        slug = slugify(label)
        if slug in slugs:
            raise SlugCollision(slugs[slug], label, slug)
        slugs[slug] = label
        iris[label] = base_iri + slug

    class_of = {frozenset(c) for c in ontology.equivalences}
    by_rep = {min(c): c for c in class_of}

    triples: list[Triple] = []
    pref = SKOS_NS + "prefLabel"
    alt = SKOS_NS + "altLabel"
    broader = SKOS_NS + "broader"

    if equivalence == EQUIVALENCE_MERGE:
        for rep in reps:
            triples.append(Triple(iris[rep], pref, rep, is_literal=True))
            for member in sorted(by_rep.get(rep, ())):
                if member != rep:
                    triples.append(Triple(iris[rep], alt, member, is_literal=True))
    else:
        for label in named:
            triples.append(Triple(iris[label], pref, label, is_literal=True))
            rep = ontology.representative(label)
            if rep != label:
                triples.append(Triple(iris[label], SKOS_EXACT_MATCH, iris[rep]))

    for child, parent in sorted(ontology.hierarchy):
        triples.append(Triple(iris[child], broader, iris[parent]))

    lines = sorted(write_ntriples(triples).splitlines())
    return "\n".join(lines) + "\n" if lines else ""


def rejected_to_dict(rejection: RejectedPair) -> dict:
    return {
        "pair_id": rejection.pair.pair_id,
        "topic_a": rejection.pair.topic_a,
        "topic_b": rejection.pair.topic_b,
        "label": rejection.pair.label.value,
        "reason": rejection.reason,
    }


def write_rejections(path: Path | str, rejections: Iterable[RejectedPair]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for rejection in rejections:
            handle.write(json.dumps(rejected_to_dict(rejection), ensure_ascii=False) + "\n")
            count += 1
    return count
