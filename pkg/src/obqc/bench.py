"""Benchmark harness: run repair sessions over a question set and compute
execution-accuracy metrics.

A dataset directory holds a manifest (JSON or CSV) with one row per
question, the ontology and instance data as Turtle, and expected answers
as CSV/JSON tables. Each run is classified as accurate first time,
accurate with repair, unknown, inaccurate, or unscorable (missing answer
or a query outside the executor subset); unscorable runs are excluded
from metric denominators and reported separately.
"""

from __future__ import annotations

import json
import statistics
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

from .executor import (
    Dataset,
    ResultTable,
    UnsupportedForExecutionError,
    evaluate,
    load_expected_file,
    results_match,
)
from .rdf import Graph, ParseError, PrefixMap, parse_turtle
from .repair import RewriterEndpoint, RepairSession, ScriptedEndpoint, SessionOutcome, run_session
from .rules import CheckOptions, DEFAULT_OPTIONS, RuleId
from .sparql import parse_query

RULE_USAGE_UNIT = (
    "violation instances per check invocation, deduplicated within a report, "
    "summed across all cycles of all sessions"
)


class Quadrant(Enum):
    LOW_Q_LOW_S = "low_question_low_schema"
    HIGH_Q_LOW_S = "high_question_low_schema"
    LOW_Q_HIGH_S = "low_question_high_schema"
    HIGH_Q_HIGH_S = "high_question_high_schema"

    @property
    def label(self) -> str:
        return _QUADRANT_LABELS[self]


_QUADRANT_LABELS = {
    Quadrant.LOW_Q_LOW_S: "Low Question / Low Schema",
    Quadrant.HIGH_Q_LOW_S: "High Question / Low Schema",
    Quadrant.LOW_Q_HIGH_S: "Low Question / High Schema",
    Quadrant.HIGH_Q_HIGH_S: "High Question / High Schema",
}


def parse_quadrant(label: str) -> Quadrant:
    key = "".join(c for c in label.lower() if c.isalnum())
    for q in Quadrant:
        candidates = {
            "".join(c for c in q.value if c.isalnum()),
            "".join(c for c in q.label.lower() if c.isalnum()),
            q.name.lower().replace("_", ""),
        }
        if key in candidates:
            return q
    raise ValueError(f"unknown quadrant label {label!r}")


class Classification(Enum):
    ACCURATE_FIRST_TIME = "accurate_first_time"
    ACCURATE_WITH_REPAIR = "accurate_with_repair"
    UNKNOWN = "unknown"
    INACCURATE = "inaccurate"
    UNSCORABLE = "unscorable"


class ManifestError(Exception):
    """Benchmark manifest is malformed; names the offending row."""


@dataclass
class BenchmarkItem:
    id: str
    question: str
    quadrant: Quadrant
    ontology_path: Path
    data_path: Path | None = None
    answer_path: Path | None = None


@dataclass
class RunRecord:
    """Outcome of one benchmark item run: the session plus its scoring."""

    item_id: str
    quadrant: Quadrant
    session: RepairSession
    classification: Classification
    executed: ResultTable | None = None
    detail: str = ""
    repeat: int = 0


def load_benchmark(directory: str | Path) -> list[BenchmarkItem]:
    """Read the manifest and validate every row.

    A missing answer file flags the item unscorable rather than dropping
    it; a missing ontology is an error because no session can run.
    """
    base = Path(directory)
    manifest_json = base / "manifest.json"
    manifest_csv = base / "manifest.csv"
    if manifest_json.exists():
        rows = _manifest_rows_json(manifest_json)
    elif manifest_csv.exists():
        rows = _manifest_rows_csv(manifest_csv)
    else:
        raise ManifestError(f"no manifest.json or manifest.csv in {base}")

    items: list[BenchmarkItem] = []
    for i, row in enumerate(rows, start=1):
        for required in ("id", "question", "quadrant", "ontology"):
            if not row.get(required):
                raise ManifestError(f"manifest row {i}: missing field {required!r}")
        try:
            quadrant = parse_quadrant(str(row["quadrant"]))
        except ValueError as exc:
            raise ManifestError(f"manifest row {i}: {exc}") from None
        ontology_path = base / str(row["ontology"])
        if not ontology_path.exists():
            raise ManifestError(f"manifest row {i}: ontology file {ontology_path} not found")
        data_path = base / str(row["data"]) if row.get("data") else None
        if data_path is not None and not data_path.exists():
            raise ManifestError(f"manifest row {i}: data file {data_path} not found")
        answer_path = base / str(row["answer"]) if row.get("answer") else None
        if answer_path is not None and not answer_path.exists():
            answer_path = None  # flagged unscorable at scoring time
        items.append(
            BenchmarkItem(
                id=str(row["id"]),
                question=str(row["question"]),
                quadrant=quadrant,
                ontology_path=ontology_path,
                data_path=data_path,
                answer_path=answer_path,
            )
        )
    return items


def _manifest_rows_json(path: Path) -> list[dict]:
    doc = json.loads(path.read_text(encoding="utf-8"))
    rows = doc["items"] if isinstance(doc, dict) else doc
    if not isinstance(rows, list):
        raise ManifestError("manifest.json must hold a list of items")
    return rows


def _manifest_rows_csv(path: Path) -> list[dict]:
    import csv

    with path.open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def load_mock_scripts(directory: str | Path) -> dict[str, list[str]]:
    """Read `<item-id>.txt` response scripts; blocks separated by `---` lines."""
    out: dict[str, list[str]] = {}
    for path in sorted(Path(directory).glob("*.txt")):
        blocks: list[list[str]] = [[]]
        for line in path.read_text(encoding="utf-8").splitlines():
            if line.strip() == "---":
                blocks.append([])
            else:
                blocks[-1].append(line)
        responses = ["\n".join(b).strip() for b in blocks]
        out[path.stem] = [r for r in responses if r] or [""]
    return out


class _SharedLoader:
    """Thread-safe per-path caches for ontologies, data and answers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._ontologies: dict[Path, tuple[str, Graph, PrefixMap]] = {}
        self._data: dict[Path, Dataset] = {}
        self._answers: dict[Path, ResultTable] = {}

    def ontology(self, path: Path) -> tuple[str, Graph, PrefixMap]:
        with self._lock:
            if path not in self._ontologies:
                text = path.read_text(encoding="utf-8")
                graph, prefixes = parse_turtle(text)
                self._ontologies[path] = (text, graph, prefixes)
            return self._ontologies[path]

    def data(self, path: Path) -> Dataset:
        with self._lock:
            if path not in self._data:
                self._data[path] = Dataset.from_turtle(path.read_text(encoding="utf-8"))
            return self._data[path]

    def answer(self, path: Path, prefixes: PrefixMap) -> ResultTable:
        with self._lock:
            if path not in self._answers:
                self._answers[path] = load_expected_file(str(path), prefixes)
            return self._answers[path]


EndpointFactory = Callable[[BenchmarkItem], RewriterEndpoint]


def scripted_endpoint_factory(scripts: dict[str, list[str]]) -> EndpointFactory:
    """Build per-item scripted endpoints from a response-script map."""

    def factory(item: BenchmarkItem) -> RewriterEndpoint:
        if item.id not in scripts:
            raise KeyError(f"no mock script for item {item.id!r}")
        return ScriptedEndpoint(scripts[item.id])

    return factory


def run_benchmark(
    items: Sequence[BenchmarkItem],
    endpoint: RewriterEndpoint | EndpointFactory,
    limit: int = 3,
    parallelism: int = 1,
    options: CheckOptions = DEFAULT_OPTIONS,
    repeats: int = 1,
) -> list[RunRecord]:
    """One RunRecord per item (times `repeats`); item errors never abort
    the batch. Pass an endpoint factory for deterministic per-item mocks."""
    loader = _SharedLoader()
    jobs = [(repeat, item) for repeat in range(repeats) for item in items]

    def run_one(job: tuple[int, BenchmarkItem]) -> RunRecord:
        repeat, item = job
        try:
            ep = endpoint(item) if not hasattr(endpoint, "generate") else endpoint
            return _run_item(item, ep, loader, limit, options, repeat)
        except Exception as exc:
            session = RepairSession(
                question=item.question, ontology_ref=str(item.ontology_path), cycle_limit=limit
            )
            session.error = str(exc)
            return RunRecord(
                item_id=item.id,
                quadrant=item.quadrant,
                session=session,
                classification=Classification.UNSCORABLE,
                detail=f"item error: {exc}",
                repeat=repeat,
            )

    if parallelism <= 1:
        records = [run_one(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(run_one, jobs))
    return records


def _run_item(
    item: BenchmarkItem,
    endpoint: RewriterEndpoint,
    loader: _SharedLoader,
    limit: int,
    options: CheckOptions,
    repeat: int,
) -> RunRecord:
    ontology_text, ontology_graph, prefixes = loader.ontology(item.ontology_path)
    session = run_session(
        item.question,
        ontology_text,
        endpoint,
        limit=limit,
        options=options,
        ontology_ref=str(item.ontology_path),
        ontology=ontology_graph,
        prefixes=prefixes,
    )
    record = RunRecord(
        item_id=item.id,
        quadrant=item.quadrant,
        session=session,
        classification=Classification.UNKNOWN,
        repeat=repeat,
    )
    if session.outcome is SessionOutcome.UNKNOWN:
        return record

    if item.answer_path is None:
        record.classification = Classification.UNSCORABLE
        record.detail = "no expected answer"
        return record
    if item.data_path is None:
        record.classification = Classification.UNSCORABLE
        record.detail = "no instance data"
        return record

    try:
        ast = parse_query(session.final_query or "")
        table = evaluate(ast, loader.data(item.data_path))
    except UnsupportedForExecutionError as exc:
        record.classification = Classification.UNSCORABLE
        record.detail = str(exc)
        return record
    except (ParseError, ValueError) as exc:
        record.classification = Classification.UNSCORABLE
        record.detail = f"execution failed: {exc}"
        return record

    record.executed = table
    expected = loader.answer(item.answer_path, prefixes)
    if results_match(table, expected):
        record.classification = (
            Classification.ACCURATE_FIRST_TIME
            if session.outcome is SessionOutcome.VALIDATED_FIRST_TIME
            else Classification.ACCURATE_WITH_REPAIR
        )
    else:
        record.classification = Classification.INACCURATE
    return record


# ---------------------------------------------------------------------------
# Metrics.


@dataclass
class RunMetrics:
    """Execution-accuracy percentages for one group; None marks
    not-applicable (empty group or zero denominator)."""

    group: str
    total: int
    unscorable: int
    counts: dict[Classification, int]
    ea_first_time: float | None
    ea_with_repairs: float | None
    unknown_with_repairs: float | None
    accuracy_plus_unknown: float | None
    error_rate: float | None
    achievable_improvement: float | None
    rule_usage: dict[str, tuple[int, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def pct(v: float | None) -> float | None:
            return None if v is None else round(v, 2)

        return {
            "group": self.group,
            "total": self.total,
            "unscorable": self.unscorable,
            "counts": {c.value: self.counts.get(c, 0) for c in Classification},
            "ea_first_time": pct(self.ea_first_time),
            "ea_with_repairs": pct(self.ea_with_repairs),
            "unknown_with_repairs": pct(self.unknown_with_repairs),
            "accuracy_plus_unknown": pct(self.accuracy_plus_unknown),
            "error_rate": pct(self.error_rate),
            "achievable_improvement": pct(self.achievable_improvement),
            "rule_usage": {
                rule: {"count": count, "pct": round(p, 2)}
                for rule, (count, p) in self.rule_usage.items()
            },
        }


def rule_usage_counts(records: Sequence[RunRecord]) -> dict[str, int]:
    """Violations per rule across every cycle report of every session."""
    counts = {rule.value: 0 for rule in RuleId}
    for record in records:
        for cycle in record.session.cycles:
            if cycle.report is None:
                continue
            for violation in cycle.report.violations:
                counts[violation.rule.value] += 1
    return counts


def _metrics_for(group: str, records: Sequence[RunRecord]) -> RunMetrics:
    counts = {c: 0 for c in Classification}
    for r in records:
        counts[r.classification] += 1
    unscorable = counts[Classification.UNSCORABLE]
    total = len(records) - unscorable

    usage_raw = rule_usage_counts(records)
    usage_total = sum(usage_raw.values())
    rule_usage = {
        rule: (count, 100.0 * count / usage_total if usage_total else 0.0)
        for rule, count in usage_raw.items()
    }

    if total == 0:
        return RunMetrics(group, 0, unscorable, counts, None, None, None, None, None, None, rule_usage)

    aft = counts[Classification.ACCURATE_FIRST_TIME]
    awr = counts[Classification.ACCURATE_WITH_REPAIR]
    unk = counts[Classification.UNKNOWN]
    ea_first = 100.0 * aft / total
    ea_rep = 100.0 * (aft + awr) / total
    unknown = 100.0 * unk / total
    acc_unknown = ea_rep + unknown
    error_rate = 100.0 - acc_unknown
    improvable = total - aft
    achievable = 100.0 * awr / improvable if improvable > 0 else None
    return RunMetrics(
        group,
        total,
        unscorable,
        counts,
        ea_first,
        ea_rep,
        unknown,
        acc_unknown,
        error_rate,
        achievable,
        rule_usage,
    )


def compute_metrics(records: Sequence[RunRecord], group_by: str = "overall") -> list[RunMetrics]:
    """Pooled metrics for 'overall'; per-quadrant groups plus the pooled
    'All Questions' row for 'quadrant'."""
    groups: list[tuple[str, list[RunRecord]]] = [("All Questions", list(records))]
    if group_by == "quadrant":
        for quadrant in Quadrant:
            groups.append((quadrant.label, [r for r in records if r.quadrant is quadrant]))
    elif group_by != "overall":
        raise ValueError(f"unknown group_by {group_by!r}")
    return [_metrics_for(name, recs) for name, recs in groups]


def repeat_spread(records: Sequence[RunRecord], group_by: str = "overall") -> dict:
    """Mean and stdev of each metric across repeat indices (repeats > 1)."""
    indices = sorted({r.repeat for r in records})
    if len(indices) < 2:
        return {}
    per_repeat = [
        compute_metrics([r for r in records if r.repeat == i], group_by) for i in indices
    ]
    fields = (
        "ea_first_time",
        "ea_with_repairs",
        "unknown_with_repairs",
        "accuracy_plus_unknown",
        "error_rate",
        "achievable_improvement",
    )
    spread: dict = {}
    for gi, group_metrics in enumerate(per_repeat[0]):
        name = group_metrics.group
        spread[name] = {}
        for f in fields:
            values = [getattr(m[gi], f) for m in per_repeat]
            values = [v for v in values if v is not None]
            if not values:
                continue
            spread[name][f] = {
                "mean": round(statistics.mean(values), 2),
                "stdev": round(statistics.stdev(values), 2) if len(values) > 1 else 0.0,
            }
    return spread


# ---------------------------------------------------------------------------
# Report rendering.

_MD_COLUMNS = (
    ("Average Overall Execution Accuracy First Time", "ea_first_time"),
    ("Average Overall Execution Accuracy with Repairs", "ea_with_repairs"),
    ("Average Overall Execution Unknown with Repairs", "unknown_with_repairs"),
    ("Average Overall Execution Accuracy + Unknown with Repairs", "accuracy_plus_unknown"),
    ("Error Rate", "error_rate"),
)

_CSV_FIELDS = (
    "total",
    "unscorable",
    "accurate_first_time",
    "accurate_with_repair",
    "unknown",
    "inaccurate",
    "ea_first_time",
    "ea_with_repairs",
    "unknown_with_repairs",
    "accuracy_plus_unknown",
    "error_rate",
    "achievable_improvement",
)


def _fmt_pct(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}%"


def render_report(
    metrics: Sequence[RunMetrics],
    fmt: str = "json",
    spread: dict | None = None,
    repeats: int = 1,
) -> str:
    if fmt == "json":
        return report_to_json(metrics, spread, repeats)
    if fmt == "markdown":
        return report_to_markdown(metrics, spread, repeats)
    if fmt == "csv":
        return report_to_csv(metrics)
    raise ValueError(f"unknown report format {fmt!r}")


def report_to_json(
    metrics: Sequence[RunMetrics], spread: dict | None = None, repeats: int = 1
) -> str:
    doc = {
        "rule_usage_unit": RULE_USAGE_UNIT,
        "repeats": repeats,
        "groups": [m.to_dict() for m in metrics],
    }
    if spread:
        doc["repeat_spread"] = spread
    return json.dumps(doc, indent=2) + "\n"


def report_to_markdown(
    metrics: Sequence[RunMetrics], spread: dict | None = None, repeats: int = 1
) -> str:
    lines = ["# Execution accuracy", ""]
    header = "| |" + "|".join(f" **{h}** " for h, _ in _MD_COLUMNS) + "|"
    sep = "|---" * (len(_MD_COLUMNS) + 1) + "|"
    lines.append(header)
    lines.append(sep)
    for m in metrics:
        cells = [_fmt_pct(getattr(m, attr)) for _, attr in _MD_COLUMNS]
        lines.append(f"| **{m.group}** | " + " | ".join(cells) + " |")
    lines.append("")
    lines.append(f"Scorable runs per group: " + ", ".join(f"{m.group}: {m.total}" for m in metrics))
    lines.append(f"Unscorable (excluded from denominators): " + ", ".join(str(m.unscorable) for m in metrics))
    if repeats > 1 and spread:
        lines.append(f"Repeats: {repeats}; spread below is mean ± stdev across repeats.")
        for group, fields in spread.items():
            parts = [f"{k} {v['mean']:.2f}% ± {v['stdev']:.2f}" for k, v in fields.items()]
            lines.append(f"- {group}: " + "; ".join(parts))
    lines.append("")
    lines.append("# Achievable improvement")
    lines.append("")
    lines.append("| | **Average Achievable Improvement** |")
    lines.append("|---|---|")
    for m in metrics:
        lines.append(f"| **{m.group}** | {_fmt_pct(m.achievable_improvement)} |")
    lines.append("")
    lines.append("# Rule usage")
    lines.append("")
    lines.append(f"Counting unit: {RULE_USAGE_UNIT}.")
    lines.append("")
    lines.append("| **Rule** | **Usage** |")
    lines.append("|---|---|")
    overall = metrics[0]
    ordered = sorted(
        overall.rule_usage.items(), key=lambda kv: (-kv[1][0], _rule_order(kv[0]))
    )
    for rule, (count, pct) in ordered:
        lines.append(f"| {_rule_display(rule)} | {pct:.2f}% |")
    lines.append("")
    return "\n".join(lines)


def _rule_order(rule_name: str) -> int:
    return [r.value for r in RuleId].index(rule_name)


_RULE_DISPLAY = {
    "Domain": "Domain",
    "Range": "Range",
    "DoubleDomain": "Double Domain",
    "DoubleRange": "Double Range",
    "DomainRange": "Domain Range",
    "IncorrectProperty": "Incorrect Property",
    "IriOutput": "IRI Output",
    "SubjectOutput": "Subject Output",
}


def _rule_display(rule_name: str) -> str:
    return _RULE_DISPLAY.get(rule_name, rule_name)


def report_to_csv(metrics: Sequence[RunMetrics]) -> str:
    lines = ["group," + ",".join(_CSV_FIELDS)]
    for m in metrics:
        counts = m.counts
        row = [
            m.group,
            str(m.total),
            str(m.unscorable),
            str(counts.get(Classification.ACCURATE_FIRST_TIME, 0)),
            str(counts.get(Classification.ACCURATE_WITH_REPAIR, 0)),
            str(counts.get(Classification.UNKNOWN, 0)),
            str(counts.get(Classification.INACCURATE, 0)),
        ]
        for attr in _CSV_FIELDS[6:]:
            value = getattr(m, attr)
            row.append("n/a" if value is None else f"{value:.2f}")
        lines.append(",".join(_csv_escape(c) for c in row))
    lines.append("")
    lines.append("rule,group,count,pct")
    for m in metrics:
        for rule in RuleId:
            count, pct = m.rule_usage.get(rule.value, (0, 0.0))
            lines.append(f"{rule.value},{_csv_escape(m.group)},{count},{pct:.2f}")
    return "\n".join(lines) + "\n"


def _csv_escape(cell: str) -> str:
    if "," in cell or '"' in cell or "\n" in cell:
        return '"' + cell.replace('"', '""') + '"'
    return cell


def report_from_csv(text: str) -> dict:
    """Parse report_to_csv output back to the JSON report shape (numbers at
    2-decimal precision)."""
    import csv as _csv
    import io as _io

    head, _, usage = text.partition("\n\nrule,group,count,pct\n")
    reader = _csv.DictReader(_io.StringIO(head))
    groups = []
    by_name: dict[str, dict] = {}
    for row in reader:
        entry: dict = {
            "group": row["group"],
            "total": int(row["total"]),
            "unscorable": int(row["unscorable"]),
            "counts": {
                Classification.ACCURATE_FIRST_TIME.value: int(row["accurate_first_time"]),
                Classification.ACCURATE_WITH_REPAIR.value: int(row["accurate_with_repair"]),
                Classification.UNKNOWN.value: int(row["unknown"]),
                Classification.INACCURATE.value: int(row["inaccurate"]),
                Classification.UNSCORABLE.value: int(row["unscorable"]),
            },
            "rule_usage": {},
        }
        for attr in _CSV_FIELDS[6:]:
            raw = row[attr]
            entry[attr] = None if raw == "n/a" else float(raw)
        groups.append(entry)
        by_name[entry["group"]] = entry
    for line in usage.strip().splitlines():
        rule, group, count, pct = next(_csv.reader(_io.StringIO(line)))
        by_name[group]["rule_usage"][rule] = {"count": int(count), "pct": float(pct)}
    return {"rule_usage_unit": RULE_USAGE_UNIT, "repeats": 1, "groups": groups}
