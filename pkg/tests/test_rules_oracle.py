"""Randomized equivalence between the rule engine and the naive oracle.

The oracle (tests/oracle.py) encodes the published SPARQL rule queries as
literal nested loops with its own closure computation; every generated
(query, ontology) instance must produce identical firing sets from both
sides, in both default and strict modes.
"""

from __future__ import annotations

import random

from obqc.querygraph import build
from obqc.rdf import (
    OWL_NS,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_RANGE,
    RDFS_SUBCLASSOF,
    RDF_TYPE,
    XSD_NS,
    Graph,
    Triple,
    bnode,
    iri,
    literal,
)
from obqc.rules import (
    CheckOptions,
    check,
    rule_domain,
    rule_double_domain,
    rule_double_range,
    rule_domain_range,
    rule_incorrect_property,
    rule_iri_output,
    rule_range,
    rule_subject_output,
)
from obqc.sparql import TriplePattern, Variable

from .oracle import RuleOracle, violations_to_firings

INS = "http://example.com/insurance#"

CLASSES = [iri(INS + f"C{i}") for i in range(6)]
PROPS = [iri(INS + f"p{i}") for i in range(5)]
FOREIGN_PROPS = [iri(f"http://other.org/vocab#q{i}") for i in range(2)]
VARIABLES = [Variable(f"v{i}") for i in range(4)]
RDF_TYPE_TERM = iri(RDF_TYPE)


def random_ontology(rng: random.Random) -> Graph:
    g = Graph()
    for _ in range(rng.randint(0, 10)):
        roll = rng.random()
        prop = rng.choice(PROPS)
        if roll < 0.28:
            g.add(Triple(prop, iri(RDFS_DOMAIN), rng.choice(CLASSES)))
        elif roll < 0.56:
            g.add(Triple(prop, iri(RDFS_RANGE), rng.choice(CLASSES)))
        elif roll < 0.74:
            g.add(Triple(rng.choice(CLASSES), iri(RDFS_SUBCLASSOF), rng.choice(CLASSES)))
        elif roll < 0.86:
            g.add(Triple(prop, RDF_TYPE_TERM, iri(OWL_NS + "ObjectProperty")))
        elif roll < 0.92:
            g.add(Triple(prop, iri(RDFS_RANGE), iri(XSD_NS + "string")))
        elif roll < 0.97:
            g.add(Triple(prop, rng.choice([iri(RDFS_DOMAIN), iri(RDFS_RANGE)]), bnode(f"u{rng.randrange(3)}")))
        else:
            # Declarations over rdf:type itself stress marker invisibility.
            g.add(Triple(RDF_TYPE_TERM, iri(RDFS_DOMAIN), rng.choice(CLASSES)))
    return g


def random_patterns(rng: random.Random) -> tuple[list[TriplePattern], list[str]]:
    patterns: list[TriplePattern] = []
    for _ in range(rng.randint(1, 6)):
        roll = rng.random()
        if roll < 0.4:
            s = rng.choice(VARIABLES)
            o = rng.choice(CLASSES + VARIABLES)
            patterns.append(TriplePattern(s, RDF_TYPE_TERM, o))
            continue
        s = rng.choice(VARIABLES + [bnode("blank0"), rng.choice(CLASSES)])
        if rng.random() < 0.08:
            p = rng.choice(VARIABLES)
        elif rng.random() < 0.12:
            p = rng.choice(FOREIGN_PROPS + [iri(RDFS_LABEL)])
        else:
            p = rng.choice(PROPS)
        o = rng.choice(VARIABLES + [rng.choice(CLASSES), literal("1")])
        patterns.append(TriplePattern(s, p, o))
    projected = [v.name for v in VARIABLES if rng.random() < 0.4]
    return patterns, projected


RULE_PAIRS = [
    (rule_domain, "domain"),
    (rule_range, "range_"),
    (rule_double_domain, "double_domain"),
    (rule_double_range, "double_range"),
    (rule_domain_range, "domain_range"),
    (rule_incorrect_property, "incorrect_property"),
    (rule_iri_output, "iri_output"),
    (rule_subject_output, "subject_output"),
]


def run_equivalence(instances: int, seed: int, paper_strict: bool) -> int:
    rng = random.Random(seed)
    options = CheckOptions(paper_strict=paper_strict)
    mismatches = 0
    for _ in range(instances):
        ontology = random_ontology(rng)
        patterns, projected = random_patterns(rng)
        cg, _ = build(patterns, projected, ontology)
        oracle = RuleOracle(
            list(cg.query_graph), list(ontology), paper_strict=paper_strict
        )
        for rule_fn, oracle_name in RULE_PAIRS:
            got = violations_to_firings(rule_fn(cg, options))
            want = getattr(oracle, oracle_name)()
            if got != want:
                mismatches += 1
    return mismatches


class TestOracleEquivalence:
    def test_500_instances_per_rule_strict_mode(self):
        assert run_equivalence(500, seed=4326, paper_strict=True) == 0

    def test_500_instances_per_rule_default_mode(self):
        assert run_equivalence(500, seed=8128, paper_strict=False) == 0

    def test_full_check_matches_oracle_union(self):
        rng = random.Random(777)
        for _ in range(500):
            ontology = random_ontology(rng)
            patterns, projected = random_patterns(rng)
            cg, _ = build(patterns, projected, ontology)
            report = check(cg)
            got = violations_to_firings(report.violations)
            want = RuleOracle(list(cg.query_graph), list(ontology)).all_firings()
            assert got == want

    def test_monotonicity_of_body_rules(self):
        # Adding one more query pattern never removes an existing violation
        # of the pairwise body rules.
        rng = random.Random(31337)
        body_rules = (rule_domain, rule_range, rule_double_domain, rule_double_range,
                      rule_domain_range)
        for _ in range(150):
            ontology = random_ontology(rng)
            patterns, _ = random_patterns(rng)
            extra, _ = random_patterns(rng)
            cg_small, _ = build(patterns, [], ontology)
            cg_big, _ = build(patterns + extra[:1], [], ontology)
            for rule_fn in body_rules:
                small = violations_to_firings(rule_fn(cg_small))
                big = violations_to_firings(rule_fn(cg_big))
                assert small <= big
