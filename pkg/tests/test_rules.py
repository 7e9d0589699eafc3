"""Per-rule behavior, golden explanation sentences, report determinism."""

from __future__ import annotations

import pytest

from obqc.querygraph import DEFAULT_NAMESPACES, build as _raw_build
from obqc.rdf import (
    OWL_NS,
    RDF_TYPE,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_RANGE,
    RDFS_SUBCLASSOF,
    XSD_NS,
    Graph,
    PrefixMap,
    Triple,
    iri,
    literal,
    parse_turtle,
)
from obqc.rules import (
    CheckOptions,
    RuleId,
    check,
    check_query,
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

from .conftest import (
    CLAIMS_ONTOLOGY_TTL,
    CLAIM_AGAINST_POLICY_QUERY,
    CONFLICTING_RANGES_QUERY,
    CORRECT_DIRECTION_QUERY,
    GOLDEN_DOMAIN_SENTENCE,
    GOLDEN_DOUBLE_RANGE_SENTENCE,
    GOLDEN_RANGE_SENTENCE,
    SOLD_BY_AGENT_TTL,
    WRONG_DIRECTION_QUERY,
    check_text,
)

INS = "http://example.com/insurance#"


def _ontology(*triples) -> Graph:
    return Graph(triples)


def _dom(prop, cls) -> Triple:
    return Triple(iri(INS + prop), iri(RDFS_DOMAIN), iri(INS + cls))


def _rng(prop, cls) -> Triple:
    return Triple(iri(INS + prop), iri(RDFS_RANGE), iri(INS + cls))


def _sub(a, b) -> Triple:
    return Triple(iri(INS + a), iri(RDFS_SUBCLASSOF), iri(INS + b))


def _typed(prop) -> Triple:
    return Triple(iri(INS + prop), iri(RDF_TYPE), iri(OWL_NS + "ObjectProperty"))


def _pat(s, p, o) -> TriplePattern:
    def part(x):
        if isinstance(x, str) and x.startswith("?"):
            return Variable(x[1:])
        return x

    return TriplePattern(part(s), part(p), part(o))


A = iri(RDF_TYPE)

_PREFIXES = PrefixMap({"": INS})


def build(bgps, projected, ontology, **kwargs):
    kwargs.setdefault("prefixes", _PREFIXES.copy())
    return _raw_build(bgps, projected, ontology, **kwargs)


class TestGoldenSentences:
    def test_domain_worked_example(self):
        _, _, report = check_text(WRONG_DIRECTION_QUERY, SOLD_BY_AGENT_TTL)
        assert GOLDEN_DOMAIN_SENTENCE in report.messages()
        domain_violations = [v for v in report.violations if v.rule is RuleId.DOMAIN]
        assert len(domain_violations) == 1
        bindings = domain_violations[0].bindings
        assert bindings["p"] == iri(INS + "soldByAgent")
        assert bindings["domain"] == iri(INS + "Policy")
        assert bindings["class"] == iri(INS + "Agent")

    def test_range_worked_example(self):
        _, _, report = check_text(CLAIM_AGAINST_POLICY_QUERY, CLAIMS_ONTOLOGY_TTL)
        assert GOLDEN_RANGE_SENTENCE in report.messages()

    def test_double_range_worked_example(self):
        _, _, report = check_text(CONFLICTING_RANGES_QUERY, CLAIMS_ONTOLOGY_TTL)
        assert GOLDEN_DOUBLE_RANGE_SENTENCE in report.messages()

    def test_correct_direction_body_passes(self):
        # Same direction fixture, with the property typed so the printed
        # Incorrect Property rule stays quiet.
        ontology, prefixes = parse_turtle(
            SOLD_BY_AGENT_TTL
            + "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
            + ":soldByAgent a owl:ObjectProperty .\n"
        )
        patterns = [
            _pat("?policy", iri(INS + "soldByAgent"), "?agent"),
            _pat("?policy", A, iri(INS + "Policy")),
        ]
        cg, _ = build(patterns, [], ontology, prefixes=prefixes)
        assert check(cg).passed


class TestDomainRule:
    def test_fires_with_expected_bindings(self):
        ontology = _ontology(_dom("p", "Policy"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?s", A, iri(INS + "Agent"))],
            [],
            ontology,
        )
        (v,) = rule_domain(cg)
        assert v.bindings["class"] == iri(INS + "Agent")

    def test_no_firing_when_class_equals_domain(self):
        ontology = _ontology(_dom("p", "Policy"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?s", A, iri(INS + "Policy"))],
            [],
            ontology,
        )
        assert rule_domain(cg) == []

    def test_no_firing_for_two_hop_subclass(self):
        ontology = _ontology(_dom("p", "Top"), _sub("Bottom", "Mid"), _sub("Mid", "Top"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?s", A, iri(INS + "Bottom"))],
            [],
            ontology,
        )
        assert rule_domain(cg) == []

    def test_untyped_subject_never_fires(self):
        ontology = _ontology(_dom("p", "Policy"))
        cg, _ = build([_pat("?s", iri(INS + "p"), "?o")], [], ontology)
        assert rule_domain(cg) == []

    def test_one_violation_per_incompatible_declaration(self):
        ontology = _ontology(_dom("p", "Policy"), _dom("p", "Claim"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?s", A, iri(INS + "Agent"))],
            [],
            ontology,
        )
        assert len(rule_domain(cg)) == 2

    def test_subclass_cycle_counts_as_compatible(self):
        ontology = _ontology(_dom("p", "A"), _sub("A", "B"), _sub("B", "A"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?s", A, iri(INS + "B"))],
            [],
            ontology,
        )
        assert rule_domain(cg) == []


class TestRangeRule:
    def test_untyped_object_never_fires(self):
        ontology = _ontology(_rng("p", "Policy"))
        cg, _ = build([_pat("?s", iri(INS + "p"), "?o")], [], ontology)
        assert rule_range(cg) == []

    def test_blank_node_range_is_skipped(self):
        ontology_ttl = (
            f"@prefix : <{INS}> .\n"
            "@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n"
            "@prefix owl: <http://www.w3.org/2002/07/owl#> .\n"
            ":p rdfs:range [ a owl:Class ] .\n"
        )
        ontology, _ = parse_turtle(ontology_ttl)
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?o"), _pat("?o", A, iri(INS + "Agent"))],
            [],
            ontology,
        )
        assert rule_range(cg) == []

    def test_literal_object_cannot_be_typed(self):
        ontology = _ontology(_rng("p", "Policy"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), literal("x")), _pat("?c", A, iri(INS + "Agent"))],
            [],
            ontology,
        )
        assert rule_range(cg) == []


class TestDoubleRangeRule:
    def test_same_property_twice_never_fires(self):
        ontology = _ontology(_rng("p", "Policy"))
        cg, _ = build(
            [_pat("?a", iri(INS + "p"), "?o"), _pat("?b", iri(INS + "p"), "?o")],
            [],
            ontology,
        )
        assert rule_double_range(cg) == []

    def test_subclass_related_ranges_never_fire(self):
        ontology = _ontology(_rng("p", "Sub"), _rng("q", "Super"), _sub("Sub", "Super"))
        cg, _ = build(
            [_pat("?a", iri(INS + "p"), "?o"), _pat("?b", iri(INS + "q"), "?o")],
            [],
            ontology,
        )
        assert rule_double_range(cg) == []

    def test_incompatible_ranges_fire_both_orientations(self):
        ontology = _ontology(_rng("p", "PolicyCoverageDetail"), _rng("q", "Policy"))
        cg, _ = build(
            [_pat("?a", iri(INS + "p"), "?o"), _pat("?b", iri(INS + "q"), "?o")],
            [],
            ontology,
        )
        violations = rule_double_range(cg)
        assert len(violations) == 2


class TestDoubleDomainRule:
    def test_incompatible_domains_fire(self):
        ontology = _ontology(_dom("p", "Claim"), _dom("q", "Policy"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?x"), _pat("?s", iri(INS + "q"), "?y")],
            [],
            ontology,
        )
        violations = rule_double_domain(cg)
        assert violations
        messages = {v.message for v in violations}
        assert (
            "The property :p has domain :Claim, and :q has domain :Policy, "
            "and these are incompatible." in {m for m in messages}
            or any(":p" in m for m in messages)
        )

    def test_equal_domains_never_fire(self):
        ontology = _ontology(_dom("p", "Policy"), _dom("q", "Policy"))
        cg, _ = build(
            [_pat("?s", iri(INS + "p"), "?x"), _pat("?s", iri(INS + "q"), "?y")],
            [],
            ontology,
        )
        assert rule_double_domain(cg) == []

    def test_same_pattern_against_itself_never_fires(self):
        ontology = _ontology(_dom("p", "Policy"))
        cg, _ = build([_pat("?s", iri(INS + "p"), "?x")], [], ontology)
        assert rule_double_domain(cg) == []


class TestDomainRangeRule:
    def test_chain_with_incompatible_link_fires(self):
        ontology = _ontology(_rng("against", "PolicyCoverageDetail"), _dom("soldByAgent", "Policy"))
        cg, _ = build(
            [
                _pat("?x", iri(INS + "against"), "?y"),
                _pat("?y", iri(INS + "soldByAgent"), "?z"),
            ],
            [],
            ontology,
        )
        (v,) = rule_domain_range(cg)
        assert v.message == (
            "The property :against has range :PolicyCoverageDetail, and "
            ":soldByAgent has domain :Policy, and these are incompatible "
            "with the query."
        )

    def test_equal_range_and_domain_never_fire(self):
        ontology = _ontology(_rng("p", "Mid"), _dom("q", "Mid"))
        cg, _ = build(
            [_pat("?x", iri(INS + "p"), "?y"), _pat("?y", iri(INS + "q"), "?z")],
            [],
            ontology,
        )
        assert rule_domain_range(cg) == []

    def test_superclass_domain_never_fires(self):
        ontology = _ontology(_rng("p", "Sub"), _dom("q", "Super"), _sub("Sub", "Super"))
        cg, _ = build(
            [_pat("?x", iri(INS + "p"), "?y"), _pat("?y", iri(INS + "q"), "?z")],
            [],
            ontology,
        )
        assert rule_domain_range(cg) == []


class TestIncorrectPropertyRule:
    def test_unknown_property_fires(self):
        ontology = _ontology(_typed("known"))
        cg, _ = build([_pat("?s", iri(INS + "madeUpProp"), "?o")], [], ontology)
        (v,) = rule_incorrect_property(cg)
        assert v.message == (
            "The property :madeUpProp isn't defined in the ontology. Please "
            "only use properties from the ontology, or from a standard source "
            "like rdf:, rdfs:, owl:, or skos:"
        )

    def test_whitelisted_namespaces_never_fire(self):
        cg, _ = build(
            [
                _pat("?s", A, iri(INS + "Agent")),
                _pat("?s", iri(RDFS_LABEL), "?l"),
                _pat("?s", iri(OWL_NS + "sameAs"), "?t"),
            ],
            [],
            Graph(),
        )
        assert rule_incorrect_property(cg) == []

    def test_domain_only_property_fires_under_printed_rule(self):
        ontology = _ontology(_dom("p", "C"))
        cg, _ = build([_pat("?s", iri(INS + "p"), "?o")], [], ontology)
        assert len(rule_incorrect_property(cg)) == 1

    def test_domain_only_property_accepted_with_flag(self):
        ontology = _ontology(_dom("p", "C"))
        cg, _ = build([_pat("?s", iri(INS + "p"), "?o")], [], ontology)
        options = CheckOptions(accept_domain_range_declared=True)
        assert rule_incorrect_property(cg, options) == []

    def test_variable_predicate_fires_with_surface_name(self):
        cg, _ = build([_pat("?s", "?pred", "?o")], [], Graph())
        (v,) = rule_incorrect_property(cg)
        assert "?pred" in v.message


class TestIriOutputRule:
    def test_projected_object_of_iri_ranged_property_fires(self):
        ontology = _ontology(_rng("against", "PolicyCoverageDetail"), _typed("against"))
        cg, _ = build(
            [_pat("?c", iri(INS + "against"), "?policy")], ["policy"], ontology
        )
        (v,) = rule_iri_output(cg)
        assert v.message == (
            "Your selected variable ?policy is an IRI; your output should be "
            "something human readable, an ID or a label."
        )
        assert v.bindings["varname"] == literal("policy")

    def test_datatype_range_excluded_by_default_included_in_strict(self):
        ontology = _ontology(
            Triple(iri(INS + "name"), iri(RDFS_RANGE), iri(XSD_NS + "string")),
            _typed("name"),
        )
        cg, _ = build([_pat("?a", iri(INS + "name"), "?n")], ["n"], ontology)
        assert rule_iri_output(cg) == []
        strict = rule_iri_output(cg, CheckOptions(paper_strict=True))
        assert len(strict) == 1

    def test_variable_never_in_object_position_never_fires(self):
        ontology = _ontology(_rng("p", "C"))
        cg, _ = build([_pat("?v", iri(INS + "p"), "?other")], ["v"], ontology)
        assert rule_iri_output(cg) == []


class TestSubjectOutputRule:
    def test_projected_subject_fires(self):
        cg, _ = build(
            [_pat("?agent", iri(INS + "soldByAgent"), "?policy")], ["agent"], Graph()
        )
        (v,) = rule_subject_output(cg)
        assert v.message == (
            "Your selected variable ?agent is an IRI (the subject of a triple "
            "is always an IRI). Your output should be something human "
            "readable, an ID or a label."
        )

    def test_object_only_variable_never_fires(self):
        cg, _ = build([_pat("?agent", iri(INS + "hasName"), "?name")], ["name"], Graph())
        assert rule_subject_output(cg) == []

    def test_marker_triple_itself_does_not_trigger(self):
        cg, _ = build([_pat("?x", iri(INS + "p"), "?v")], ["v"], Graph())
        assert rule_subject_output(cg) == []

    def test_annotation_only_subject_skipped_by_default(self):
        cg, _ = build([_pat("?v", iri(RDFS_LABEL), "?label")], ["v"], Graph())
        assert rule_subject_output(cg) == []
        strict = rule_subject_output(cg, CheckOptions(paper_strict=True))
        assert len(strict) == 1

    def test_mixed_occurrences_fire(self):
        cg, _ = build(
            [
                _pat("?v", iri(RDFS_LABEL), "?label"),
                _pat("?v", iri(INS + "p"), "?w"),
            ],
            ["v"],
            Graph(),
        )
        assert len(rule_subject_output(cg)) == 1


class TestMarkerInvisibility:
    def test_markers_do_not_feed_body_rules(self):
        # If markers were visible, the typing triple (var rdf:type Marker)
        # would satisfy the domain rule's class clause.
        ontology = Graph(
            [Triple(iri(RDF_TYPE), iri(RDFS_DOMAIN), iri(INS + "OnlyThing"))]
        )
        cg, _ = build([], ["v"], ontology)
        report = check(cg)
        assert all(v.rule is not RuleId.DOMAIN for v in report.violations)

    def test_user_typing_pattern_with_projected_class_variable(self):
        # ?x rdf:type ?v (both vars, ?v projected) must stay a body triple.
        cg, _ = build([_pat("?x", A, "?v")], ["v"], Graph())
        report = check(cg)
        assert any(v.rule is RuleId.SUBJECT_OUTPUT for v in report.violations) is False


class TestCheckReport:
    def test_report_order_and_dedup_deterministic(self):
        ontology = _ontology(
            _dom("p", "Claim"), _dom("q", "Policy"), _rng("p", "X"), _rng("q", "Y")
        )
        patterns = [
            _pat("?s", iri(INS + "p"), "?o"),
            _pat("?s", iri(INS + "q"), "?o"),
            _pat("?s", A, iri(INS + "Agent")),
        ]
        cg, _ = build(patterns, ["s", "o"], ontology)
        r1 = check(cg)
        r2 = check(cg)
        assert [v.message for v in r1.violations] == [v.message for v in r2.violations]
        rule_order = [list(RuleId).index(v.rule) for v in r1.violations]
        assert rule_order == sorted(rule_order)
        assert len({(v.rule, v.message) for v in r1.violations}) == len(r1.violations)

    def test_passed_iff_no_violations(self):
        cg, _ = build([], [], Graph())
        report = check(cg)
        assert report.passed and report.violations == []

    def test_to_dict_schema(self):
        _, _, report = check_text(WRONG_DIRECTION_QUERY, SOLD_BY_AGENT_TTL)
        doc = report.to_dict()
        assert doc["passed"] is False
        assert {"rule", "bindings", "message"} <= set(doc["violations"][0])


class TestCheckQuery:
    def test_end_to_end_helper(self):
        ast, cg, report = check_query(WRONG_DIRECTION_QUERY, SOLD_BY_AGENT_TTL)
        assert GOLDEN_DOMAIN_SENTENCE in report.messages()
        assert not report.passed

    def test_correct_direction_query_head_rules_still_apply(self):
        ast, cg, report = check_query(CORRECT_DIRECTION_QUERY, SOLD_BY_AGENT_TTL)
        rules_fired = {v.rule for v in report.violations}
        assert RuleId.DOMAIN not in rules_fired
        assert RuleId.SUBJECT_OUTPUT in rules_fired
