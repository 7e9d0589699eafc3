"""Run a tiny mock-driven benchmark end to end and print the report.

Builds a four-question dataset on the fly (one per quadrant), scripts a
rewriter per question, runs the repair sessions, executes the validated
queries, and renders execution-accuracy metrics plus the rule-usage table.
"""

import json
import tempfile
from pathlib import Path

from obqc.bench import (
    compute_metrics,
    load_benchmark,
    render_report,
    run_benchmark,
    scripted_endpoint_factory,
)

ONTOLOGY = """\
@prefix : <http://example.com/insurance#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .
@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .
@prefix owl: <http://www.w3.org/2002/07/owl#> .
@prefix xsd: <http://www.w3.org/2001/XMLSchema#> .

:soldByAgent a owl:ObjectProperty ; rdfs:domain :Policy ; rdfs:range :Agent .
:policyNumber a owl:DatatypeProperty ; rdfs:domain :Policy ; rdfs:range xsd:string .
:agentName a owl:DatatypeProperty ; rdfs:domain :Agent ; rdfs:range xsd:string .
"""

DATA = """\
@prefix : <http://example.com/insurance#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .

:p1 a :Policy ; :soldByAgent :a1 ; :policyNumber "P-100" .
:p2 a :Policy ; :soldByAgent :a2 ; :policyNumber "P-200" .
:a1 a :Agent ; :agentName "Ada" .
:a2 a :Agent ; :agentName "Grace" .
"""

GOOD = """\
PREFIX : <http://example.com/insurance#>
SELECT ?num WHERE { ?p a :Policy . ?p :policyNumber ?num }"""

WRONG_DIRECTION = """\
PREFIX : <http://example.com/insurance#>
PREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>
SELECT ?name WHERE { ?a :soldByAgent ?p . ?a rdf:type :Agent . ?a :agentName ?name }"""

FIXED_DIRECTION = """\
PREFIX : <http://example.com/insurance#>
SELECT ?name WHERE { ?p :soldByAgent ?a . ?a :agentName ?name }"""

QUADRANTS = [
    "low_question_low_schema",
    "high_question_low_schema",
    "low_question_high_schema",
    "high_question_high_schema",
]

with tempfile.TemporaryDirectory() as tmp:
    base = Path(tmp)
    (base / "ontology.ttl").write_text(ONTOLOGY)
    (base / "data.ttl").write_text(DATA)
    (base / "answers").mkdir()
    (base / "answers/d1.csv").write_text("num\nP-100\nP-200\n")
    (base / "answers/d2.csv").write_text("name\nAda\nGrace\n")
    (base / "answers/d3.csv").write_text("name\nAda\n")
    (base / "answers/d4.csv").write_text("num\nP-100\n")
    manifest = {
        "items": [
            {"id": f"d{i}", "question": q, "quadrant": quadrant,
             "ontology": "ontology.ttl", "data": "data.ttl",
             "answer": f"answers/d{i}.csv"}
            for i, (q, quadrant) in enumerate(
                [
                    ("All policy numbers?", QUADRANTS[0]),
                    ("Names of agents who sold policies?", QUADRANTS[1]),
                    ("Who sold policy P-100?", QUADRANTS[2]),
                    ("Numbers of policies sold by Ada?", QUADRANTS[3]),
                ],
                start=1,
            )
        ]
    }
    (base / "manifest.json").write_text(json.dumps(manifest))

    scripts = {
        "d1": [GOOD],                               # accurate first time
        "d2": [WRONG_DIRECTION, FIXED_DIRECTION],   # accurate after one repair
        "d3": [WRONG_DIRECTION],                    # never fixed: unknown
        "d4": [GOOD],                               # validated but wrong answer
    }

    items = load_benchmark(base)
    records = run_benchmark(items, scripted_endpoint_factory(scripts))
    for record in records:
        print(f"{record.item_id}: {record.classification.value}")
    print()
    print(render_report(compute_metrics(records, group_by="quadrant"), "markdown"))
