"""Walk through checking one generated SPARQL query against an ontology.

The ontology says a Policy is sold by an Agent. The query below got the
direction backwards: it types the *subject* of :soldByAgent as an Agent,
while the declared domain is Policy. The checker turns that mismatch into
plain-English explanations a person (or a rewriter model) can act on.
"""

from obqc import check_query

ONTOLOGY = """\
@prefix : <http://example.com/insurance#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .

:soldByAgent a owl:ObjectProperty ;
    rdfs:domain :Policy ;
    rdfs:range :Agent .

:agentName a owl:DatatypeProperty ;
    rdfs:domain :Agent ;
    rdfs:range xsd:string .
"""

WRONG_DIRECTION = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?name WHERE {
  ?agent :soldByAgent ?policy .
  ?agent rdf:type :Agent .
  ?agent :agentName ?name
}
"""

CORRECTED = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?name WHERE {
  ?policy :soldByAgent ?agent .
  ?policy rdf:type :Policy .
  ?agent :agentName ?name
}
"""

print("=== the faulty query ===")
print(WRONG_DIRECTION)

ast, dataset, report = check_query(WRONG_DIRECTION, ONTOLOGY)

print("=== what the checker sees (N-Quads, query + ontology graphs) ===")
print(dataset.to_nquads())

print("=== explanations ===")
for message in report.messages():
    print("-", message)

print()
print("=== after fixing the direction ===")
_, _, fixed_report = check_query(CORRECTED, ONTOLOGY)
print("passed!" if fixed_report.passed else "\n".join(fixed_report.messages()))
