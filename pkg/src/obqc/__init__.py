"""Ontology-based query checking, repair orchestration and benchmarking
for LLM-generated SPARQL."""

from .rdf import (
    Graph,
    ParseError,
    PrefixMap,
    Quad,
    Term,
    Triple,
    UnknownPrefixError,
    bnode,
    iri,
    literal,
    parse_nquads,
    parse_turtle,
    serialize_nquads,
    subclass_closure,
)
from .sparql import (
    Context,
    ContextFlag,
    QueryAst,
    SparqlParseError,
    TriplePattern,
    UnsupportedFeatureError,
    Variable,
    extract_bgps,
    parse_query,
    projected_variables,
)
from .querygraph import (
    ConjunctiveGraph,
    Namespaces,
    SkolemMap,
    UnknownSkolemError,
    build,
    deskolemize_bindings,
)
from .rules import (
    CheckOptions,
    CheckReport,
    RuleId,
    Violation,
    check,
    check_query,
)
from .repair import (
    CycleRecord,
    EndpointError,
    HttpEndpoint,
    RepairSession,
    ScriptedEndpoint,
    SessionOutcome,
    build_generation_prompt,
    build_repair_prompt,
    run_session,
    scripted_mock,
)
from .executor import (
    Dataset,
    ResultTable,
    UnsupportedForExecutionError,
    evaluate,
    results_match,
)
from .bench import (
    BenchmarkItem,
    Classification,
    ManifestError,
    Quadrant,
    RunMetrics,
    RunRecord,
    compute_metrics,
    load_benchmark,
    render_report,
    run_benchmark,
)

__version__ = "0.1.0"
