"""Drive the bounded generate / check / repair loop with a scripted rewriter.

A scripted endpoint stands in for the LLM: first it answers with a
wrong-direction query, then (after receiving the checker's explanation in
the repair prompt) with a corrected one. A second, stubborn endpoint never
fixes anything, so after the cycle limit the loop gives an explicit
"unknown" rather than shipping a query it knows is faulty.
"""

from obqc import SessionOutcome, run_session, scripted_mock

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

WRONG = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?name WHERE {
  ?agent :soldByAgent ?policy .
  ?agent rdf:type :Agent
}"""

CORRECTED = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?name WHERE {
  ?policy :soldByAgent ?agent .
  ?policy rdf:type :Policy .
  ?agent :agentName ?name
}"""

print("=== a rewriter that listens ===")
rewriter = scripted_mock([WRONG, CORRECTED])
session = run_session("Which agent sold each policy?", ONTOLOGY, rewriter)
print("outcome:", session.outcome.value, f"({len(session.cycles)} cycles)")
print()
print("the repair prompt that fixed it:")
print(rewriter.prompts[1])
print()
print("validated query:")
print(session.final_query)

print()
print("=== a rewriter that never listens ===")
stubborn = scripted_mock([WRONG])
session = run_session("Which agent sold each policy?", ONTOLOGY, stubborn, limit=3)
print("outcome:", session.outcome.value, f"after {stubborn.call_count} endpoint calls")
assert session.outcome is SessionOutcome.UNKNOWN
print("no query is returned; the failure is explicit, not a wrong answer.")
