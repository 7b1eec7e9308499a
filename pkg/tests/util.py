"""Shared builders for synthetic taxonomies and labeled pairs.

Labels carry a per-source prefix so that pairs drawn from different
synthetic sources never collide on content when bundles are merged.
"""
from __future__ import annotations

from topicrel.graph import MESH_NS, RDF_TYPE, RDFS_LABEL, SKOS_NS
from topicrel.labels import RelationLabel
from topicrel.pairs import (
    PROVENANCE_HIERARCHY,
    PROVENANCE_NEGATIVE,
    PROVENANCE_RELATED,
    LabeledPair,
    make_pair_id,
)

ConceptSpec = dict[str, tuple[str, tuple[str, ...]]]  # id -> (pref, alts)

_PROVENANCE_FOR = {
    RelationLabel.BROADER: PROVENANCE_HIERARCHY,
    RelationLabel.NARROWER: PROVENANCE_HIERARCHY,
    RelationLabel.OTHER: PROVENANCE_NEGATIVE,
    RelationLabel.SAME_AS: PROVENANCE_RELATED,
}


def pair(
    topic_a: str,
    topic_b: str,
    label: RelationLabel,
    *,
    source: str = "test",
    pair_id: str | None = None,
) -> LabeledPair:
    return LabeledPair(
        pair_id=pair_id or make_pair_id(source, "t", topic_a, topic_b, label.value),
        topic_a=topic_a,
        topic_b=topic_b,
        label=label,
        source=source,
        provenance=_PROVENANCE_FOR[label],
    )


def forest(
    prefix: str, trees: int, branching: int, depth: int, alts: bool = False
) -> tuple[ConceptSpec, list[tuple[str, str]]]:
    """A forest of complete trees. Returns (concepts, edges) where every
    edge is (child_id, parent_id); labels are unique across the forest."""
    concepts: ConceptSpec = {}
    edges: list[tuple[str, str]] = []
    counter = 0

    def new_concept() -> str:
        nonlocal counter
        cid = f"http://example.org/{prefix}/c{counter}"
        label = f"{prefix} topic {counter}"
        concepts[cid] = (label, (f"{label} (alt)",) if alts else ())
        counter += 1
        return cid

    for _ in range(trees):
        level = [new_concept()]
        for _ in range(depth):
            next_level = []
            for parent in level:
                for _ in range(branching):
                    child = new_concept()
                    edges.append((child, parent))
                    next_level.append(child)
            level = next_level
    return concepts, edges


def skos_nt(
    concepts: ConceptSpec,
    edges: list[tuple[str, str]] = (),
    narrower_edges: list[tuple[str, str]] = (),
    lang: str | None = None,
) -> str:
    """SKOS N-Triples text: prefLabel/altLabel literals plus broader
    (child, parent) and narrower (parent, child) statements."""
    tag = f"@{lang}" if lang else ""
    lines = []
    for cid, (pref, alts) in concepts.items():
        lines.append(f'<{cid}> <{SKOS_NS}prefLabel> "{pref}"{tag} .')
        for alt in alts:
            lines.append(f'<{cid}> <{SKOS_NS}altLabel> "{alt}"{tag} .')
    for child, parent in edges:
        lines.append(f"<{child}> <{SKOS_NS}broader> <{parent}> .")
    for parent, child in narrower_edges:
        lines.append(f"<{parent}> <{SKOS_NS}narrower> <{child}> .")
    return "\n".join(lines) + "\n"


def mesh_nt(
    concepts: ConceptSpec,
    edges: list[tuple[str, str]] = (),
    related: list[tuple[str, str]] = (),
    typed: bool = True,
) -> str:
    """MeSH-style N-Triples text: rdfs:label plus broaderDescriptor
    (child, parent) and relatedConcept statements; descriptors are typed
    as TopicalDescriptor unless typed=False."""
    lines = []
    for cid, (pref, _alts) in concepts.items():
        if typed:
            lines.append(f"<{cid}> <{RDF_TYPE}> <{MESH_NS}TopicalDescriptor> .")
        lines.append(f'<{cid}> <{RDFS_LABEL}> "{pref}" .')
    for child, parent in edges:
        lines.append(f"<{child}> <{MESH_NS}broaderDescriptor> <{parent}> .")
    for a, b in related:
        lines.append(f"<{a}> <{MESH_NS}relatedConcept> <{b}> .")
    return "\n".join(lines) + "\n"


def related_pairs(concepts: ConceptSpec, count: int) -> list[tuple[str, str]]:
    """Pair up concepts (1st with 2nd, 3rd with 4th, ...) as related edges."""
    ids = sorted(concepts)
    pairs = list(zip(ids[0::2], ids[1::2]))
    if count > len(pairs):
        raise ValueError(f"asked for {count} related pairs, only {len(pairs)} possible")
    return pairs[:count]
