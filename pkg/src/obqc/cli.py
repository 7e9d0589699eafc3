"""Command line front end: check, dump, repair and bench subcommands."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench as bench_mod
from .rdf import ParseError, import_notices, parse_turtle
from .repair import HttpEndpoint, ScriptedEndpoint, SessionOutcome, run_session
from .rules import CheckOptions, check_query


def _check_options(args: argparse.Namespace) -> CheckOptions:
    return CheckOptions(paper_strict=getattr(args, "paper_strict", False))


def _load_ontology(path: str):
    text = Path(path).read_text(encoding="utf-8")
    graph, prefixes = parse_turtle(text)
    for notice in import_notices(graph):
        print(f"warning: {notice}", file=sys.stderr)
    return text, graph, prefixes


def cmd_check(args: argparse.Namespace) -> int:
    try:
        query_text = Path(args.query).read_text(encoding="utf-8")
        _, graph, prefixes = _load_ontology(args.ontology)
        ast, cg, report = check_query(query_text, graph, prefixes, options=_check_options(args))
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for notice in cg.notices:
        print(f"notice: {notice}", file=sys.stderr)
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=2))
    else:
        if report.passed:
            print("passed: no violations")
        else:
            for message in report.messages():
                print(message)
    return 0 if report.passed else 1


def cmd_dump(args: argparse.Namespace) -> int:
    try:
        query_text = Path(args.query).read_text(encoding="utf-8")
        _, graph, prefixes = _load_ontology(args.ontology)
        _, cg, _ = check_query(query_text, graph, prefixes)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(cg.to_nquads())
    return 0


def _read_mock_file(path: str) -> list[str]:
    blocks: list[list[str]] = [[]]
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() == "---":
            blocks.append([])
        else:
            blocks[-1].append(line)
    responses = ["\n".join(b).strip() for b in blocks]
    return [r for r in responses if r] or [""]


def cmd_repair(args: argparse.Namespace) -> int:
    try:
        ontology_text, ontology_graph, prefixes = _load_ontology(args.ontology)
        if args.mock:
            endpoint = ScriptedEndpoint(_read_mock_file(args.mock))
        else:
            endpoint = HttpEndpoint.from_config(args.endpoint)
    except (OSError, ParseError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    session = run_session(
        args.question,
        ontology_text,
        endpoint,
        limit=args.limit,
        options=_check_options(args),
        ontology_ref=args.ontology,
        ontology=ontology_graph,
        prefixes=prefixes,
    )
    if args.transcript:
        Path(args.transcript).write_text(
            json.dumps(session.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    print(f"outcome: {session.outcome.value} (cycles: {len(session.cycles)})")
    if session.error:
        print(f"error: {session.error}", file=sys.stderr)
    if session.validated:
        print(session.final_query)
        return 0
    print("no validated query produced", file=sys.stderr)
    return 1


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        items = bench_mod.load_benchmark(args.dataset)
        if args.mock_dir:
            scripts = bench_mod.load_mock_scripts(args.mock_dir)
            endpoint = bench_mod.scripted_endpoint_factory(scripts)
        else:
            shared = HttpEndpoint.from_config(args.endpoint)
            endpoint = lambda item: shared  # noqa: E731 - one shared client
        records = bench_mod.run_benchmark(
            items,
            endpoint,
            limit=args.limit,
            parallelism=args.parallel,
            options=_check_options(args),
            repeats=args.repeats,
        )
    except (bench_mod.ManifestError, OSError, ParseError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    metrics = bench_mod.compute_metrics(records, group_by=args.group)
    spread = bench_mod.repeat_spread(records, group_by=args.group) if args.repeats > 1 else None
    report = bench_mod.render_report(metrics, fmt=args.format, spread=spread, repeats=args.repeats)
    if args.out:
        Path(args.out).write_text(report, encoding="utf-8")
    else:
        sys.stdout.write(report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obqc",
        description=(
            "Validate SPARQL queries against ontology semantics, repair them "
            "through a pluggable rewriter, and benchmark execution accuracy."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser("check", help="check one query against an ontology")
    p_check.add_argument("--query", required=True, help="SPARQL SELECT file (.rq)")
    p_check.add_argument("--ontology", required=True, help="ontology Turtle file (.ttl)")
    p_check.add_argument("--format", choices=("text", "json"), default="text")
    p_check.add_argument("--paper-strict", action="store_true")
    p_check.set_defaults(func=cmd_check)

    p_dump = sub.add_parser("dump", help="emit the skolemized dataset as N-Quads")
    p_dump.add_argument("--query", required=True)
    p_dump.add_argument("--ontology", required=True)
    p_dump.set_defaults(func=cmd_dump)

    p_rep = sub.add_parser("repair", help="run the generate/check/repair loop")
    p_rep.add_argument("--question", required=True)
    p_rep.add_argument("--ontology", required=True)
    group = p_rep.add_mutually_exclusive_group(required=True)
    group.add_argument("--endpoint", help="TOML config for an HTTP rewriter")
    group.add_argument("--mock", help="scripted responses file ('---'-separated)")
    p_rep.add_argument("--limit", type=int, default=3)
    p_rep.add_argument("--transcript", help="write the session transcript JSON here")
    p_rep.add_argument("--paper-strict", action="store_true")
    p_rep.set_defaults(func=cmd_repair)

    p_bench = sub.add_parser("bench", help="run a benchmark dataset and report metrics")
    p_bench.add_argument("--dataset", required=True, help="directory with manifest + fixtures")
    group = p_bench.add_mutually_exclusive_group(required=True)
    group.add_argument("--endpoint", help="TOML config for an HTTP rewriter")
    group.add_argument("--mock-dir", help="directory of <item-id>.txt response scripts")
    p_bench.add_argument("--limit", type=int, default=3)
    p_bench.add_argument("--parallel", type=int, default=1)
    p_bench.add_argument("--group", choices=("overall", "quadrant"), default="quadrant")
    p_bench.add_argument("--repeats", type=int, default=1)
    p_bench.add_argument("--out", help="write the report here instead of stdout")
    p_bench.add_argument("--format", choices=("json", "markdown", "csv"), default="json")
    p_bench.add_argument("--paper-strict", action="store_true")
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
