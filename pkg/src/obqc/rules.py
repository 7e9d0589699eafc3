"""The eight ontology-consistency rules and their English explanations.

Six rules test the body of the query (the WHERE patterns) against
rdfs:domain / rdfs:range declarations and the reflexive-transitive
subclass hierarchy; two test the head (which variables are selected for
output). Rules are implemented as direct joins over the query and
ontology graphs, but each one mirrors a published SPARQL formulation, and
the test suite holds them to a literal nested-loop encoding of those
queries.

Classes with no subclass path in either direction are treated as disjoint;
domain/range declarations that are not IRIs (e.g. OWL unions as blank
nodes) are skipped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .rdf import (
    OWL_NS,
    RDF_NS,
    RDFS_DOMAIN,
    RDFS_LABEL,
    RDFS_NS,
    RDFS_RANGE,
    RDF_TYPE,
    SKOS_NS,
    XSD_NS,
    Graph,
    PrefixMap,
    Term,
    Triple,
    iri,
    literal,
    parse_turtle,
    subclass_closure,
)
from .querygraph import ConjunctiveGraph, build, render_term
from .sparql import QueryAst, extract_bgps, parse_query, projected_variables

STANDARD_NAMESPACES = (RDF_NS, OWL_NS, RDFS_NS, SKOS_NS)


class RuleId(Enum):
    """Report ordering follows declaration order."""

    DOMAIN = "Domain"
    RANGE = "Range"
    DOUBLE_DOMAIN = "DoubleDomain"
    DOUBLE_RANGE = "DoubleRange"
    DOMAIN_RANGE = "DomainRange"
    INCORRECT_PROPERTY = "IncorrectProperty"
    IRI_OUTPUT = "IriOutput"
    SUBJECT_OUTPUT = "SubjectOutput"


TEMPLATES: dict[RuleId, str] = {
    RuleId.DOMAIN: (
        "The property {p} has domain {domain}, but its subject {s} is a "
        "{class}, which isn't a subclass of {domain}."
    ),
    RuleId.RANGE: (
        "The property {p} has range {range}, but its object {o} is a "
        "{class}, which isn't a subclass of {range}."
    ),
    RuleId.DOUBLE_DOMAIN: (
        "The property {p} has domain {domp}, and {q} has domain {domq}, "
        "and these are incompatible."
    ),
    RuleId.DOUBLE_RANGE: (
        "The property {p} has range {rangep}, and {q} has range {rangeq}, "
        "and these are incompatible."
    ),
    RuleId.DOMAIN_RANGE: (
        "The property {p} has range {rangep}, and {q} has domain {domq}, "
        "and these are incompatible with the query."
    ),
    RuleId.INCORRECT_PROPERTY: (
        "The property {p} isn't defined in the ontology. Please only use "
        "properties from the ontology, or from a standard source like "
        "rdf:, rdfs:, owl:, or skos:"
    ),
    RuleId.IRI_OUTPUT: (
        "Your selected variable ?{varname} is an IRI; your output should "
        "be something human readable, an ID or a label."
    ),
    RuleId.SUBJECT_OUTPUT: (
        "Your selected variable ?{varname} is an IRI (the subject of a "
        "triple is always an IRI). Your output should be something human "
        "readable, an ID or a label."
    ),
}


@dataclass(frozen=True)
class CheckOptions:
    """Tuning knobs for deliberate deviations from the raw rule queries.

    paper_strict disables every softening: output rules then also fire for
    XSD-datatype ranges and for annotation-only subjects. The
    accept_domain_range_declared flag lets Incorrect Property treat a
    property as known when the ontology declares a domain or range for it,
    even without an rdf:type assertion.
    """

    paper_strict: bool = False
    annotation_predicates: tuple[str, ...] = (RDFS_LABEL,)
    accept_domain_range_declared: bool = False


DEFAULT_OPTIONS = CheckOptions()


@dataclass
class Violation:
    """One rule firing: the bindings that matched and the rendered sentence."""

    rule: RuleId
    bindings: dict[str, Term]
    message: str

    def sort_key(self):
        rule_order = list(RuleId).index(self.rule)
        return (rule_order, tuple(sorted((k, v.nq()) for k, v in self.bindings.items())))

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.value,
            "bindings": {k: v.nq() for k, v in sorted(self.bindings.items())},
            "message": self.message,
        }


@dataclass
class CheckReport:
    """All violations for one query, deterministically ordered and deduplicated."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "violations": [v.to_dict() for v in self.violations],
        }


# ---------------------------------------------------------------------------
# Shared scaffolding.


class _RuleInput:
    """Precomputed views of the conjunctive graph shared by all rules."""

    def __init__(self, cg: ConjunctiveGraph, options: CheckOptions) -> None:
        self.cg = cg
        self.options = options
        self.rdf_type = iri(RDF_TYPE)
        marker_class = iri(cg.namespaces.variable_class)
        self.markers: set[Term] = set()
        body: list[Triple] = []
        for t in cg.query_graph:
            if t.p == self.rdf_type and t.o == marker_class:
                self.markers.add(t.s)
            else:
                body.append(t)
        # Marker triples are checker metadata, not user pattern content;
        # no rule may treat them as part of the query.
        self.body = body
        self.typed: list[tuple[Term, Term]] = [
            (t.s, t.o) for t in body if t.p == self.rdf_type
        ]
        self.domains = _declarations(cg.ontology_graph, iri(RDFS_DOMAIN))
        self.ranges = _declarations(cg.ontology_graph, iri(RDFS_RANGE))
        # subClassOf* searches the default graph, which is the union of
        # both named graphs.
        union = Graph(cg.query_graph)
        union.update(cg.ontology_graph)
        self.closure_graph = union

    def compatible(self, a: Term, b: Term) -> bool:
        """Either class reaches the other through subClassOf*."""
        return subclass_closure(self.closure_graph, a, b) or subclass_closure(
            self.closure_graph, b, a
        )

    def violation(self, rule: RuleId, bindings: dict[str, Term]) -> Violation:
        rendered = {
            name: _surface(term, self.cg) for name, term in bindings.items()
        }
        return Violation(rule, bindings, TEMPLATES[rule].format(**rendered))


def _surface(term: Term, cg: ConjunctiveGraph) -> str:
    if cg.skolem is not None and cg.skolem.is_skolem(term):
        return cg.skolem.surface(term)
    if term.is_literal:
        return term.value
    return render_term(term, None, cg.prefixes)


def _declarations(ontology: Graph, predicate: Term) -> dict[Term, list[Term]]:
    out: dict[Term, list[Term]] = {}
    for t in ontology.match(p=predicate):
        out.setdefault(t.s, []).append(t.o)
    return out


def _finish(violations: list[Violation]) -> list[Violation]:
    """Deterministic order, duplicates (same rule and message) removed."""
    seen: set[tuple[RuleId, str]] = set()
    out: list[Violation] = []
    for v in sorted(violations, key=Violation.sort_key):
        key = (v.rule, v.message)
        if key not in seen:
            seen.add(key)
            out.append(v)
    return out


def _local_name(iri_text: str) -> str:
    for sep in ("#", "/"):
        idx = iri_text.rfind(sep)
        if idx != -1:
            return iri_text[idx + 1 :]
    return iri_text


# ---------------------------------------------------------------------------
# Body rules.


def rule_domain(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """The subject of a triple must fall under the property's declared domain."""
    rin = _RuleInput(cg, options)
    return _domain_impl(rin)


def _domain_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t in rin.body:
        for subj, cls in rin.typed:
            if subj != t.s:
                continue
            for dom in rin.domains.get(t.p, ()):
                if not dom.is_iri:
                    continue
                if subclass_closure(rin.closure_graph, cls, dom):
                    continue
                out.append(
                    rin.violation(
                        RuleId.DOMAIN,
                        {"p": t.p, "domain": dom, "s": t.s, "class": cls},
                    )
                )
    return _finish(out)


def rule_range(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """The object of a triple must fall under the property's declared range."""
    rin = _RuleInput(cg, options)
    return _range_impl(rin)


def _range_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t in rin.body:
        for subj, cls in rin.typed:
            if subj != t.o:
                continue
            for rng in rin.ranges.get(t.p, ()):
                if not rng.is_iri:
                    continue
                if subclass_closure(rin.closure_graph, cls, rng):
                    continue
                out.append(
                    rin.violation(
                        RuleId.RANGE,
                        {"p": t.p, "range": rng, "o": t.o, "class": cls},
                    )
                )
    return _finish(out)


def rule_double_domain(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """Two triples sharing a subject need compatible property domains."""
    rin = _RuleInput(cg, options)
    return _double_domain_impl(rin)


def _double_domain_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t1 in rin.body:
        for t2 in rin.body:
            if t1.s != t2.s:
                continue
            for domp in rin.domains.get(t1.p, ()):
                if not domp.is_iri:
                    continue
                for domq in rin.domains.get(t2.p, ()):
                    if not domq.is_iri:
                        continue
                    if rin.compatible(domp, domq):
                        continue
                    out.append(
                        rin.violation(
                            RuleId.DOUBLE_DOMAIN,
                            {"p": t1.p, "domp": domp, "q": t2.p, "domq": domq},
                        )
                    )
    return _finish(out)


def rule_double_range(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """Two triples sharing an object need compatible property ranges."""
    rin = _RuleInput(cg, options)
    return _double_range_impl(rin)


def _double_range_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t1 in rin.body:
        for t2 in rin.body:
            if t1.o != t2.o:
                continue
            for rangep in rin.ranges.get(t1.p, ()):
                if not rangep.is_iri:
                    continue
                for rangeq in rin.ranges.get(t2.p, ()):
                    if not rangeq.is_iri:
                        continue
                    if rin.compatible(rangep, rangeq):
                        continue
                    out.append(
                        rin.violation(
                            RuleId.DOUBLE_RANGE,
                            {"p": t1.p, "rangep": rangep, "q": t2.p, "rangeq": rangeq},
                        )
                    )
    return _finish(out)


def rule_domain_range(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """When one triple's object is another's subject, the first property's
    range must be compatible with the second property's domain."""
    rin = _RuleInput(cg, options)
    return _domain_range_impl(rin)


def _domain_range_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t1 in rin.body:
        for t2 in rin.body:
            if t1.o != t2.s:
                continue
            for rangep in rin.ranges.get(t1.p, ()):
                if not rangep.is_iri:
                    continue
                for domq in rin.domains.get(t2.p, ()):
                    if not domq.is_iri:
                        continue
                    if rin.compatible(rangep, domq):
                        continue
                    out.append(
                        rin.violation(
                            RuleId.DOMAIN_RANGE,
                            {"p": t1.p, "rangep": rangep, "q": t2.p, "domq": domq},
                        )
                    )
    return _finish(out)


def rule_incorrect_property(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """Every query property must exist in the ontology or come from a
    standard vocabulary (rdf:, rdfs:, owl:, skos:)."""
    rin = _RuleInput(cg, options)
    return _incorrect_property_impl(rin)


def _incorrect_property_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    seen: set[Term] = set()
    for t in rin.body:
        p = t.p
        if p in seen:
            continue
        seen.add(p)
        if any(p.value.startswith(ns) for ns in STANDARD_NAMESPACES):
            continue
        if any(True for _ in rin.cg.ontology_graph.match(s=p, p=rin.rdf_type)):
            continue
        if rin.options.accept_domain_range_declared and (
            p in rin.domains or p in rin.ranges
        ):
            continue
        out.append(rin.violation(RuleId.INCORRECT_PROPERTY, {"p": p}))
    return _finish(out)


# ---------------------------------------------------------------------------
# Head rules.


def rule_iri_output(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """A selected variable in object position of an IRI-ranged property will
    be bound to IRIs, which are not human-readable output."""
    rin = _RuleInput(cg, options)
    return _iri_output_impl(rin)


def _iri_output_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for t in rin.body:
        if t.o not in rin.markers:
            continue
        for rng in rin.ranges.get(t.p, ()):
            if not rng.is_iri:
                continue
            # Datatype ranges (xsd:*) produce literals, not IRIs; only the
            # strict mode keeps the raw behavior of flagging them too.
            if not rin.options.paper_strict and rng.value.startswith(XSD_NS):
                continue
            varname = _local_name(t.o.value)
            out.append(
                rin.violation(RuleId.IRI_OUTPUT, {"varname": literal(varname)})
            )
    return _finish(out)


def rule_subject_output(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> list[Violation]:
    """A selected variable used as a subject is always bound to IRIs."""
    rin = _RuleInput(cg, options)
    return _subject_output_impl(rin)


def _subject_output_impl(rin: _RuleInput) -> list[Violation]:
    out = []
    for marker in rin.markers:
        occurrences = [t for t in rin.body if t.s == marker]
        if not occurrences:
            continue
        if not rin.options.paper_strict and all(
            t.p.value in rin.options.annotation_predicates for t in occurrences
        ):
            # Label-fetching patterns select the annotation value, not the
            # subject IRI itself; skip them unless running strict.
            continue
        varname = _local_name(marker.value)
        out.append(rin.violation(RuleId.SUBJECT_OUTPUT, {"varname": literal(varname)}))
    return _finish(out)


# ---------------------------------------------------------------------------
# Entry points.

_ALL_RULES = (
    _domain_impl,
    _range_impl,
    _double_domain_impl,
    _double_range_impl,
    _domain_range_impl,
    _incorrect_property_impl,
    _iri_output_impl,
    _subject_output_impl,
)


def check(cg: ConjunctiveGraph, options: CheckOptions = DEFAULT_OPTIONS) -> CheckReport:
    """Evaluate all eight rules and merge their firings into one report."""
    rin = _RuleInput(cg, options)
    violations: list[Violation] = []
    for impl in _ALL_RULES:
        violations.extend(impl(rin))
    return CheckReport(_finish(violations))


def check_query(
    query_text: str,
    ontology: Graph | str,
    prefixes: PrefixMap | None = None,
    options: CheckOptions = DEFAULT_OPTIONS,
) -> tuple[QueryAst, ConjunctiveGraph, CheckReport]:
    """Parse, skolemize and check a query in one step.

    `ontology` may be a parsed Graph or Turtle text. The prefix map (from
    the ontology document) merges with the query's own declarations for
    explanation rendering.
    """
    if isinstance(ontology, str):
        ontology, onto_prefixes = parse_turtle(ontology)
        if prefixes is None:
            prefixes = onto_prefixes
    ast = parse_query(query_text)
    merged = prefixes.copy() if prefixes is not None else PrefixMap()
    for label, ns in ast.declared_prefixes.items():
        merged.bind(label, ns)
    cg, _ = build(extract_bgps(ast), projected_variables(ast), ontology, prefixes=merged)
    cg.notices.extend(ast.notices)
    return ast, cg, check(cg, options)
