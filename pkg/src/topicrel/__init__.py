"""Toolkit for building relation-labeled topic pair datasets from
SKOS/MeSH taxonomies, classifying them with LLM endpoints, and
assembling the accepted relations into a cycle-free ontology."""

__version__ = "0.1.0"
