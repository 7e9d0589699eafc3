"""Evaluate validated queries in memory and compare result tables.

The evaluator covers plain BGP joins, OPTIONAL, simple FILTER comparisons,
DISTINCT and LIMIT; that is enough to score small benchmark answers.
Result comparison ignores row order and column names/positions, so a
query that returns the same rows under different column labels still
counts as accurate.
"""

from obqc import Dataset, ResultTable, evaluate, parse_query, results_match
from obqc.rdf import literal

DATA = """\
@prefix : <http://example.com/insurance#> .
@prefix rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#> .

:p1 a :Policy ; :soldByAgent :a1 ; :policyNumber "P-100" .
:p2 a :Policy ; :soldByAgent :a1 ; :policyNumber "P-200" .
:p3 a :Policy ; :soldByAgent :a2 .
:a1 a :Agent ; :agentName "Ada" .
:a2 a :Agent ; :agentName "Grace" .
"""

dataset = Dataset.from_turtle(DATA)

query = parse_query("""
PREFIX : <http://example.com/insurance#>
SELECT ?num ?name WHERE {
  ?p :soldByAgent ?a .
  ?a :agentName ?name .
  OPTIONAL { ?p :policyNumber ?num }
}
""")

table = evaluate(query, dataset)
print("columns:", table.columns)
for row in table.rows:
    print("  ", [c.value if c is not None else None for c in row])

expected = ResultTable(
    columns=["who", "number"],
    rows=[
        (literal("Ada"), literal("P-100")),
        (literal("Ada"), literal("P-200")),
        (literal("Grace"), None),
    ],
)
print()
print("expected table has swapped columns and different labels.")
print("results_match:", results_match(table, expected))
