"""Shared fixtures: the insurance ontologies and queries used across tests."""

from __future__ import annotations

import pytest

from obqc.querygraph import build
from obqc.rdf import parse_turtle
from obqc.rules import CheckOptions, check
from obqc.sparql import extract_bgps, parse_query, projected_variables

SOLD_BY_AGENT_TTL = """\
@prefix : <http://example.com/insurance#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .

:soldByAgent rdfs:domain :Policy ;
    rdfs:range :Agent .
"""

WRONG_DIRECTION_QUERY = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?agent WHERE {
  ?agent :soldByAgent ?policy .
  ?agent rdf:type :Agent
}
"""

CORRECT_DIRECTION_QUERY = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?agent ?policy WHERE {
  ?policy :soldByAgent ?agent .
  ?policy rdf:type :Policy
}
"""

CLAIMS_ONTOLOGY_TTL = """\
@prefix : <http://example.com/insurance#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .

:against rdf:type owl:ObjectProperty ;
    rdfs:domain :Claim ;
    rdfs:range :PolicyCoverageDetail .

:hasPolicy rdf:type owl:ObjectProperty ;
    rdfs:domain :PolicyCoverageDetail ;
    rdfs:range :Policy .
"""

CLAIM_AGAINST_POLICY_QUERY = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?policy WHERE {
  ?policy rdf:type :Policy .
  ?claim rdf:type :Claim .
  ?claim :against ?policy .
}
"""

CONFLICTING_RANGES_QUERY = """\
PREFIX : <http://example.com/insurance#>
SELECT ?claim WHERE {
  ?claim :against ?policy .
  ?policyCoverageDetail :hasPolicy ?policy .
}
"""

GOLDEN_DOMAIN_SENTENCE = (
    "The property :soldByAgent has domain :Policy, but its subject ?agent "
    "is a :Agent, which isn't a subclass of :Policy."
)
GOLDEN_RANGE_SENTENCE = (
    "The property :against has range :PolicyCoverageDetail, but its object "
    "?policy is a :Policy, which isn't a subclass of :PolicyCoverageDetail."
)
GOLDEN_DOUBLE_RANGE_SENTENCE = (
    "The property :against has range :PolicyCoverageDetail, and :hasPolicy "
    "has range :Policy, and these are incompatible."
)


def check_text(query_text: str, ontology_ttl: str, options: CheckOptions | None = None):
    """Parse both inputs, build the conjunctive graph, run all rules."""
    ontology, prefixes = parse_turtle(ontology_ttl)
    ast = parse_query(query_text)
    merged = prefixes.copy()
    for label, ns in ast.declared_prefixes.items():
        merged.bind(label, ns)
    cg, skolem = build(extract_bgps(ast), projected_variables(ast), ontology, prefixes=merged)
    report = check(cg, options or CheckOptions())
    return cg, skolem, report


@pytest.fixture
def sold_by_agent_ontology():
    graph, prefixes = parse_turtle(SOLD_BY_AGENT_TTL)
    return graph, prefixes


@pytest.fixture
def claims_ontology():
    graph, prefixes = parse_turtle(CLAIMS_ONTOLOGY_TTL)
    return graph, prefixes
