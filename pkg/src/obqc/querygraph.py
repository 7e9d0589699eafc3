"""Turn extracted query patterns plus an ontology into a two-graph dataset.

Variables (and blank nodes, which are existential variables) are replaced
by fresh constant IRIs in a reserved namespace, so a basic graph pattern
can be stored as plain RDF in the query graph alongside the untouched
ontology graph. Projected variables additionally receive a class-marker
triple so the output rules can recognize them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .rdf import (
    QUERY_VAR_NS,
    RDF_TYPE,
    Graph,
    PrefixMap,
    Quad,
    Term,
    Triple,
    iri,
    literal,
    serialize_nquads,
)
from .sparql import TriplePattern, Variable


@dataclass(frozen=True)
class Namespaces:
    """Reserved IRIs for skolemization; any stable absolute IRIs work."""

    variable_ns: str = QUERY_VAR_NS
    variable_class: str = "tag:obqc,2024:Variable"
    query_graph: str = "tag:obqc,2024:graph/query"
    ontology_graph: str = "tag:obqc,2024:graph/ontology"


DEFAULT_NAMESPACES = Namespaces()


class UnknownSkolemError(Exception):
    """A reserved-namespace IRI was not produced by this skolem map."""


@dataclass
class SkolemMap:
    """Bijection between variable surface forms and their constant IRIs.

    Keys are `name` for variables and `_:label` for blank nodes; the
    reverse index is keyed by IRI text.
    """

    namespaces: Namespaces = DEFAULT_NAMESPACES
    bindings: dict[str, Term] = field(default_factory=dict)
    reverse: dict[str, str] = field(default_factory=dict)

    def skolemize_variable(self, name: str) -> Term:
        return self._intern(name, self.namespaces.variable_ns + name, f"?{name}")

    def skolemize_blank(self, label: str) -> Term:
        # The "_:" infix keeps blank labels disjoint from variable names,
        # which cannot contain a colon.
        return self._intern(
            f"_:{label}", self.namespaces.variable_ns + "_:" + label, f"_:{label}"
        )

    def _intern(self, key: str, iri_text: str, surface: str) -> Term:
        term = self.bindings.get(key)
        if term is None:
            term = iri(iri_text)
            self.bindings[key] = term
            self.reverse[iri_text] = surface
        return term

    def is_skolem(self, term: Term) -> bool:
        return term.is_iri and term.value.startswith(self.namespaces.variable_ns)

    def surface(self, term: Term) -> str:
        """The `?name` (or `_:label`) form of a skolemized term."""
        try:
            return self.reverse[term.value]
        except KeyError:
            raise UnknownSkolemError(f"not a skolemized variable: {term.nq()}") from None


@dataclass
class ConjunctiveGraph:
    """The dataset the consistency rules run against: a query graph of
    skolemized patterns and the ontology graph, plus rendering context."""

    query_graph: Graph
    ontology_graph: Graph
    namespaces: Namespaces = DEFAULT_NAMESPACES
    skolem: SkolemMap | None = None
    prefixes: PrefixMap = field(default_factory=PrefixMap)
    notices: list[str] = field(default_factory=list)

    def quads(self) -> list[Quad]:
        qg = iri(self.namespaces.query_graph)
        og = iri(self.namespaces.ontology_graph)
        return [Quad(t, qg) for t in self.query_graph] + [
            Quad(t, og) for t in self.ontology_graph
        ]

    def to_nquads(self) -> str:
        return serialize_nquads(self.quads())


def build(
    bgps: Iterable[TriplePattern],
    projected: Iterable[str],
    ontology: Graph,
    prefixes: PrefixMap | None = None,
    namespaces: Namespaces = DEFAULT_NAMESPACES,
) -> tuple[ConjunctiveGraph, SkolemMap]:
    """Skolemize the patterns into the query graph and attach the ontology.

    Each projected variable gets a `<var> rdf:type <variable-class>` marker
    triple. Duplicate patterns collapse under set semantics. A variable in
    predicate position is kept (as a skolem IRI) and reported as a notice,
    since it can never match an ontology declaration.
    """
    skolem = SkolemMap(namespaces=namespaces)
    pmap = prefixes.copy() if prefixes is not None else PrefixMap()
    pmap.bind("qq", namespaces.variable_ns)
    query_graph = Graph()
    notices: list[str] = []
    rdf_type = iri(RDF_TYPE)

    def resolve(part) -> Term:
        if isinstance(part, Variable):
            return skolem.skolemize_variable(part.name)
        if isinstance(part, Term) and part.is_blank:
            return skolem.skolemize_blank(part.value)
        return part

    for pattern in bgps:
        if isinstance(pattern.p, Variable):
            notices.append(
                f"predicate variable ?{pattern.p.name}: the pattern is kept but "
                "cannot match any ontology property declaration"
            )
        query_graph.add(Triple(resolve(pattern.s), resolve(pattern.p), resolve(pattern.o)))

    marker_class = iri(namespaces.variable_class)
    for name in projected:
        query_graph.add(Triple(skolem.skolemize_variable(name), rdf_type, marker_class))

    cg = ConjunctiveGraph(
        query_graph=query_graph,
        ontology_graph=ontology,
        namespaces=namespaces,
        skolem=skolem,
        prefixes=pmap,
        notices=notices,
    )
    return cg, skolem


def render_term(term: Term, skolem: SkolemMap | None, prefixes: PrefixMap | None) -> str:
    """Human-facing form of a term: skolems back to `?name`, IRIs compacted
    to prefixed names where possible, literals as bare lexical forms."""
    if skolem is not None and skolem.is_skolem(term):
        return skolem.surface(term)
    if term.is_iri:
        if prefixes is not None:
            compact = prefixes.compact(term.value)
            if compact is not None:
                return compact
        return f"<{term.value}>"
    if term.is_blank:
        return f"_:{term.value}"
    return term.value


def deskolemize_bindings(
    skolem: SkolemMap,
    bindings: dict[str, Term],
    prefixes: PrefixMap | None = None,
) -> dict[str, str]:
    """Map rule bindings to their surface forms for explanation rendering.

    Skolem IRIs become `?name`; other IRIs are compacted against the prefix
    map when one matches. Raises UnknownSkolemError for a reserved-namespace
    IRI the map never issued.
    """
    out: dict[str, str] = {}
    for name, term in bindings.items():
        if skolem.is_skolem(term):
            out[name] = skolem.surface(term)
        else:
            out[name] = render_term(term, None, prefixes)
    return out
