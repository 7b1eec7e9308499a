"""Normalized concept graphs built from SKOS-style or MeSH-style triples.

A ConceptGraph holds labeled concepts, directed hierarchy edges stored
as (narrower_id, broader_id), and undirected related edges stored as
canonically ordered pairs. Graphs serialize to a small JSON interchange
format with deterministically sorted arrays.
"""
from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .ntriples import Triple

logger = logging.getLogger(__name__)

SKOS_CORE = "skos-core"
MESH = "mesh"
DIALECTS = (SKOS_CORE, MESH)

SKOS_NS = "http://www.w3.org/2004/02/skos/core#"
MESH_NS = "http://id.nlm.nih.gov/mesh/vocab#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"


class DuplicatePrefLabelForId(ValueError):
    def __init__(self, concept_id: str, labels: list[str]):
        super().__init__(f"concept {concept_id} has multiple preferred labels: {labels}")
        self.concept_id = concept_id
        self.labels = labels


class EmptyGraph(ValueError):
    pass


@dataclass(frozen=True)
class PredicateMap:
    """Predicate IRIs consulted during ingestion.

    ``subject_type``, when set, restricts concepts to subjects carrying
    that rdf:type, but only if the input declares any such typing at all;
    untyped synthetic files pass through unfiltered.
    """

    broader: str
    pref_label: str
    narrower: str | None = None
    alt_label: str | None = None
    related: str | None = None
    subject_type: str | None = None


SKOS_PREDICATES = PredicateMap(
    broader=SKOS_NS + "broader",
    narrower=SKOS_NS + "narrower",
    pref_label=SKOS_NS + "prefLabel",
    alt_label=SKOS_NS + "altLabel",
)

# Descriptor surface forms default to rdfs:label; override the map for
# exports that label descriptors differently.
MESH_PREDICATES = PredicateMap(
    broader=MESH_NS + "broaderDescriptor",
    pref_label=RDFS_LABEL,
    related=MESH_NS + "relatedConcept",
    subject_type=MESH_NS + "TopicalDescriptor",
)

_DEFAULT_PREDICATES = {SKOS_CORE: SKOS_PREDICATES, MESH: MESH_PREDICATES}


@dataclass(frozen=True)
class Concept:
    id: str
    pref_label: str
    alt_labels: frozenset[str]


@dataclass(frozen=True)
class ConceptGraph:
    dialect: str
    concepts: dict[str, Concept]
    hierarchy_edges: frozenset[tuple[str, str]]  # (narrower_id, broader_id)
    related_edges: frozenset[tuple[str, str]]  # canonical (min_id, max_id)

    def pref(self, concept_id: str) -> str:
        return self.concepts[concept_id].pref_label


@dataclass(frozen=True)
class GraphStats:
    concepts: int
    hierarchy_edges: int
    related_edges: int
    alt_labels: int
    hierarchy_cycles: int


def default_predicates(dialect: str) -> PredicateMap:
    if dialect not in _DEFAULT_PREDICATES:
        raise ValueError(f"unknown dialect: {dialect!r}")
    return _DEFAULT_PREDICATES[dialect]


def build_graph(
    triples: list[Triple],
    dialect: str,
    *,
    predicates: PredicateMap | None = None,
    lang: str | None = None,
) -> ConceptGraph:
    """Normalize a triple set into a ConceptGraph.

    Concepts are subjects with a preferred label. Edges whose endpoints
    lack a label are dropped with a counted warning, as are self edges.
    Raises DuplicatePrefLabelForId on conflicting preferred labels and
    EmptyGraph when no concept survives.
    """
    pmap = predicates or default_predicates(dialect)

    typed: set[str] | None = None
    if pmap.subject_type is not None:
        found = {
            t.subject
            for t in triples
            if t.predicate == RDF_TYPE and not t.is_literal and t.obj == pmap.subject_type
        }
        typed = found or None

    def lang_ok(t: Triple) -> bool:
        return lang is None or t.lang is None or t.lang == lang

    pref_candidates: dict[str, list[str]] = defaultdict(list)
    alt_candidates: dict[str, set[str]] = defaultdict(set)
    for t in triples:
        if not t.is_literal or not lang_ok(t):
            continue
        value = t.obj.strip()
        if not value:
            continue
        if t.predicate == pmap.pref_label:
            if value not in pref_candidates[t.subject]:
                pref_candidates[t.subject].append(value)
        elif pmap.alt_label is not None and t.predicate == pmap.alt_label:
            alt_candidates[t.subject].add(value)

    concepts: dict[str, Concept] = {}
    for subject in sorted(pref_candidates):
        if typed is not None and subject not in typed:
            continue
        labels = pref_candidates[subject]
        if len(labels) > 1:
            raise DuplicatePrefLabelForId(subject, labels)
        pref = labels[0]
        alts = frozenset(
            a for a in alt_candidates.get(subject, ()) if a.lower() != pref.lower()
        )
        concepts[subject] = Concept(subject, pref, alts)

    if not concepts:
        raise EmptyGraph(f"no labeled concepts found for dialect {dialect}")

    hierarchy: set[tuple[str, str]] = set()
    related: set[tuple[str, str]] = set()
    dropped_unlabeled = 0
    dropped_self = 0
    for t in triples:
        if t.is_literal:
            continue
        if t.predicate == pmap.broader:
            edge = (t.subject, t.obj)
            target = hierarchy
        elif pmap.narrower is not None and t.predicate == pmap.narrower:
            edge = (t.obj, t.subject)
            target = hierarchy
        elif pmap.related is not None and t.predicate == pmap.related:
            edge = (t.subject, t.obj)
            target = related
        else:
            continue
        if edge[0] not in concepts or edge[1] not in concepts:
            dropped_unlabeled += 1
            continue
        if edge[0] == edge[1]:
            dropped_self += 1
            continue
        if target is related:
            edge = (min(edge), max(edge))
        target.add(edge)

    if dropped_unlabeled:
        logger.warning(
            "dropped %d edge(s) with unlabeled or filtered endpoints", dropped_unlabeled
        )
    if dropped_self:
        logger.warning("dropped %d self edge(s)", dropped_self)

    return ConceptGraph(dialect, concepts, frozenset(hierarchy), frozenset(related))


def _strongly_connected_cycles(nodes: list[str], edges: frozenset[tuple[str, str]]) -> int:
    """Number of strongly connected components of size >= 2 (Kosaraju)."""
    forward: dict[str, list[str]] = defaultdict(list)
    backward: dict[str, list[str]] = defaultdict(list)
    for a, b in edges:
        forward[a].append(b)
        backward[b].append(a)

    seen: set[str] = set()
    order: list[str] = []
    for start in nodes:
        if start in seen:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        seen.add(start)
        while stack:
            node, idx = stack[-1]
            neighbors = forward.get(node, [])
            if idx < len(neighbors):
                stack[-1] = (node, idx + 1)
                nxt = neighbors[idx]
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, 0))
            else:
                order.append(node)
                stack.pop()

    assigned: set[str] = set()
    cycles = 0
    for start in reversed(order):
        if start in assigned:
            continue
        size = 0
        todo = [start]
        assigned.add(start)
        while todo:
            node = todo.pop()
            size += 1
            for nxt in backward.get(node, []):
                if nxt not in assigned:
                    assigned.add(nxt)
                    todo.append(nxt)
        if size >= 2:
            cycles += 1
    return cycles


def graph_stats(graph: ConceptGraph) -> GraphStats:
    return GraphStats(
        concepts=len(graph.concepts),
        hierarchy_edges=len(graph.hierarchy_edges),
        related_edges=len(graph.related_edges),
        alt_labels=sum(len(c.alt_labels) for c in graph.concepts.values()),
        hierarchy_cycles=_strongly_connected_cycles(
            sorted(graph.concepts), graph.hierarchy_edges
        ),
    )


def graph_to_json_dict(graph: ConceptGraph) -> dict:
    return {
        "dialect": graph.dialect,
        "concepts": [
            {
                "id": c.id,
                "pref_label": c.pref_label,
                "alt_labels": sorted(c.alt_labels),
            }
            for c in (graph.concepts[cid] for cid in sorted(graph.concepts))
        ],
        "hierarchy_edges": sorted(list(e) for e in graph.hierarchy_edges),
        "related_edges": sorted(list(e) for e in graph.related_edges),
    }


def graph_from_json_dict(data: dict) -> ConceptGraph:
    dialect = data["dialect"]
    if dialect not in DIALECTS:
        raise ValueError(f"unknown dialect: {dialect!r}")
    concepts: dict[str, Concept] = {}
    for row in data["concepts"]:
        concept = Concept(row["id"], row["pref_label"], frozenset(row["alt_labels"]))
        if concept.id in concepts:
            raise ValueError(f"duplicate concept id: {concept.id}")
        if not concept.pref_label.strip():
            raise ValueError(f"concept {concept.id} has an empty preferred label")
        concepts[concept.id] = concept

    def checked(edge: list[str], kind: str) -> tuple[str, str]:
        a, b = edge
        if a not in concepts or b not in concepts:
            raise ValueError(f"{kind} edge references unknown concept: {edge}")
        if a == b:
            raise ValueError(f"{kind} self edge: {edge}")
        return (a, b)

    hierarchy = frozenset(checked(e, "hierarchy") for e in data["hierarchy_edges"])
    related = frozenset(
        (min(pair), max(pair))
        for pair in (checked(e, "related") for e in data["related_edges"])
    )
    return ConceptGraph(dialect, concepts, hierarchy, related)


def save_graph(graph: ConceptGraph, path: Path | str) -> None:
    text = json.dumps(graph_to_json_dict(graph), indent=2, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_graph(path: Path | str) -> ConceptGraph:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return graph_from_json_dict(data)
