"""Minimal in-memory evaluator for validated SELECT queries.

Supports exactly what desk-scale accuracy measurement needs: base-context
BGP joins, OPTIONAL as a left join, simple FILTER comparisons (=, !=, <, >
against a variable), DISTINCT and LIMIT. Everything else raises
UnsupportedForExecutionError so the benchmark can score the item as
unscorable instead of guessing. Result comparison ignores row order and
column names/positions, matching the execution-accuracy convention.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterable, Optional

from .rdf import Graph, PrefixMap, Term, XSD_NS, iri, literal, parse_turtle
from .sparql import (
    GroupPattern,
    OptionalBlock,
    QueryAst,
    RawFilter,
    TriplePattern,
    Variable,
    projected_variables,
)

_NUMERIC_DATATYPES = {
    XSD_NS + "integer",
    XSD_NS + "decimal",
    XSD_NS + "double",
    XSD_NS + "float",
    XSD_NS + "int",
    XSD_NS + "long",
    XSD_NS + "nonNegativeInteger",
}


class UnsupportedForExecutionError(Exception):
    """The query needs a feature outside the evaluator's subset."""

    def __init__(self, feature: str) -> None:
        self.feature = feature
        super().__init__(f"unsupported for execution: {feature}")


@dataclass
class Dataset:
    """Plain instance data the validated query runs over."""

    graph: Graph

    @classmethod
    def from_turtle(cls, text: str, base: str | None = None) -> "Dataset":
        graph, _ = parse_turtle(text, base)
        return cls(graph)


@dataclass
class ResultTable:
    """Projected solutions: named columns over a bag of rows.

    Cells are Terms, or None where a variable was left unbound by an
    OPTIONAL branch. Rows keep multiplicity unless the query said DISTINCT.
    """

    columns: list[str]
    rows: list[tuple] = field(default_factory=list)

    def row_multiset(self) -> dict[tuple, int]:
        counts: dict[tuple, int] = {}
        for row in self.rows:
            counts[row] = counts.get(row, 0) + 1
        return counts


# ---------------------------------------------------------------------------
# Evaluation.

_Binding = dict[str, Term]


def evaluate(ast: QueryAst, data: Dataset) -> ResultTable:
    """Standard BGP join semantics over the dataset, small and exact."""
    if any(p.expression_text is not None for p in ast.projection):
        raise UnsupportedForExecutionError("expression projection")
    limit = _parse_limit(ast.trailing)

    solutions = _evaluate_group(ast.pattern, data.graph, ast.prefixes)

    columns = projected_variables(ast)
    rows = [tuple(sol.get(c) for c in columns) for sol in solutions]
    if ast.distinct or ast.reduced:
        seen: set[tuple] = set()
        deduped = []
        for row in rows:
            if row not in seen:
                seen.add(row)
                deduped.append(row)
        rows = deduped
    if limit is not None:
        rows = rows[:limit]
    return ResultTable(columns, rows)


def _parse_limit(trailing: str) -> int | None:
    if not trailing:
        return None
    m = re.fullmatch(r"LIMIT\s+(\d+)", trailing.strip(), re.IGNORECASE)
    if not m:
        head = trailing.split(None, 1)[0]
        raise UnsupportedForExecutionError(f"solution modifier {head}")
    return int(m.group(1))


def _evaluate_group(group: GroupPattern, data: Graph, prefixes: PrefixMap) -> list[_Binding]:
    solutions: list[_Binding] = [{}]
    filters: list[RawFilter] = []
    for el in group.elements:
        if isinstance(el, TriplePattern):
            solutions = _join_pattern(solutions, el, data)
        elif isinstance(el, OptionalBlock):
            solutions = _left_join(solutions, el.group, data, prefixes)
        elif isinstance(el, RawFilter):
            filters.append(el)
        else:
            raise UnsupportedForExecutionError(type(el).__name__)
    for f in filters:
        predicate = _compile_filter(f.text, prefixes)
        solutions = [sol for sol in solutions if predicate(sol)]
    return solutions


def _join_pattern(solutions: list[_Binding], pattern: TriplePattern, data: Graph) -> list[_Binding]:
    out: list[_Binding] = []
    for sol in solutions:
        for t in data:
            bound = _unify(pattern, t, sol)
            if bound is not None:
                out.append(bound)
    return out


def _unify(pattern: TriplePattern, t, sol: _Binding) -> Optional[_Binding]:
    updates: _Binding = {}
    for part, value in ((pattern.s, t.s), (pattern.p, t.p), (pattern.o, t.o)):
        if isinstance(part, Variable):
            existing = sol.get(part.name, updates.get(part.name))
            if existing is None:
                updates[part.name] = value
            elif existing != value:
                return None
        elif isinstance(part, Term) and part.is_blank:
            # Query blank nodes act as non-projected variables.
            key = f"_:{part.value}"
            existing = sol.get(key, updates.get(key))
            if existing is None:
                updates[key] = value
            elif existing != value:
                return None
        elif part != value:
            return None
    if not updates:
        return sol
    merged = dict(sol)
    merged.update(updates)
    return merged


def _left_join(
    solutions: list[_Binding], group: GroupPattern, data: Graph, prefixes: PrefixMap
) -> list[_Binding]:
    patterns = [el for el in group.elements if isinstance(el, TriplePattern)]
    filters = [el for el in group.elements if isinstance(el, RawFilter)]
    for el in group.elements:
        if not isinstance(el, (TriplePattern, RawFilter)):
            raise UnsupportedForExecutionError(f"OPTIONAL containing {type(el).__name__}")
    predicates = [_compile_filter(f.text, prefixes) for f in filters]
    out: list[_Binding] = []
    for sol in solutions:
        extensions: list[_Binding] = [sol]
        for pattern in patterns:
            extensions = _join_pattern(extensions, pattern, data)
            if not extensions:
                break
        # Filters scope over the whole optional group, after its joins.
        extensions = [e for e in extensions if all(p(e) for p in predicates)]
        if extensions:
            out.extend(extensions)
        else:
            out.append(sol)
    return out


_FILTER_RE = re.compile(
    r"^\(\s*\?(?P<var>\w+)\s*(?P<op>!=|=|<|>)\s*(?P<rhs>.+?)\s*\)$", re.DOTALL
)


def _compile_filter(text: str, prefixes: PrefixMap):
    m = _FILTER_RE.match(text.strip())
    if not m:
        raise UnsupportedForExecutionError(f"FILTER {text}")
    var, op = m.group("var"), m.group("op")
    rhs_text = m.group("rhs")
    rhs_var = re.fullmatch(r"\?(\w+)", rhs_text)
    rhs_term = None if rhs_var else parse_term_token(rhs_text, prefixes)

    def predicate(sol: _Binding) -> bool:
        left = sol.get(var)
        right = sol.get(rhs_var.group(1)) if rhs_var else rhs_term
        if left is None or right is None:
            return False
        return _compare(left, right, op)

    return predicate


def _numeric(term: Term) -> float | None:
    if term.is_literal and (term.datatype in _NUMERIC_DATATYPES or term.datatype is None):
        try:
            return float(term.value)
        except ValueError:
            return None
    return None


def _compare(left: Term, right: Term, op: str) -> bool:
    ln, rn = _numeric(left), _numeric(right)
    if ln is not None and rn is not None:
        if op == "=":
            return ln == rn
        if op == "!=":
            return ln != rn
        return ln < rn if op == "<" else ln > rn
    if op == "=":
        return left == right
    if op == "!=":
        return left != right
    lv = left.value if isinstance(left, Term) else str(left)
    rv = right.value if isinstance(right, Term) else str(right)
    return lv < rv if op == "<" else lv > rv


# ---------------------------------------------------------------------------
# Result comparison.


def results_match(actual: ResultTable, expected: ResultTable) -> bool:
    """True when some column permutation of `actual` makes the row multisets
    equal. Row order and column labels never matter."""
    if len(actual.columns) != len(expected.columns):
        return False
    n = len(actual.columns)
    if n > 8:
        raise ValueError("column-permutation matching is limited to 8 columns")
    if n == 0:
        return len(actual.rows) == len(expected.rows)
    expected_counts = expected.row_multiset()
    if len(actual.rows) != len(expected.rows):
        return False
    for perm in permutations(range(n)):
        counts: dict[tuple, int] = {}
        for row in actual.rows:
            permuted = tuple(row[i] for i in perm)
            counts[permuted] = counts.get(permuted, 0) + 1
        if counts == expected_counts:
            return True
    return False


# ---------------------------------------------------------------------------
# Expected-answer loading.

_TERM_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")


def parse_term_token(text: str, prefixes: PrefixMap | None = None) -> Term:
    """Parse one Turtle-style term token, as used in answer files.

    `<iri>`, quoted literals (with optional @lang / ^^datatype), prefixed
    names, numbers and booleans are recognized; any other bare text is a
    plain literal.
    """
    text = text.strip()
    if not text:
        raise ValueError("empty term token")
    if text.startswith("<") and text.endswith(">"):
        return iri(text[1:-1])
    if text.startswith('"'):
        m = re.match(r'"((?:[^"\\]|\\.)*)"(?:@([A-Za-z][A-Za-z0-9-]*)|\^\^(.+))?$', text)
        if not m:
            raise ValueError(f"malformed literal token: {text!r}")
        value = m.group(1).encode().decode("unicode_escape")
        lang, dt = m.group(2), m.group(3)
        if lang:
            return literal(value, language=lang)
        if dt:
            dt = dt.strip()
            if dt.startswith("<") and dt.endswith(">"):
                return literal(value, datatype=dt[1:-1])
            if prefixes is not None:
                return literal(value, datatype=prefixes.expand(dt))
            return literal(value, datatype=PrefixMap().expand(dt))
        return literal(value)
    if _TERM_NUMBER_RE.fullmatch(text):
        if re.fullmatch(r"[+-]?\d+", text):
            return literal(text, datatype=XSD_NS + "integer")
        if "e" in text or "E" in text:
            return literal(text, datatype=XSD_NS + "double")
        return literal(text, datatype=XSD_NS + "decimal")
    if text in ("true", "false"):
        return literal(text, datatype=XSD_NS + "boolean")
    if ":" in text and not text.startswith("_:"):
        if prefixes is not None:
            try:
                return iri(prefixes.expand(text))
            except Exception:
                pass
    return literal(text)


def load_expected_csv(text: str, prefixes: PrefixMap | None = None) -> ResultTable:
    """CSV with a header row of column names; cells are term tokens.

    Empty cells load as unbound (None).
    """
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        return ResultTable([], [])
    columns = [c.strip() for c in rows[0]]
    table_rows = []
    for raw in rows[1:]:
        if not raw or all(not c.strip() for c in raw):
            continue
        cells = tuple(
            parse_term_token(c, prefixes) if c.strip() else None for c in raw
        )
        if len(cells) != len(columns):
            raise ValueError(f"row width {len(cells)} != header width {len(columns)}")
        table_rows.append(cells)
    return ResultTable(columns, table_rows)


def load_expected_json(text: str, prefixes: PrefixMap | None = None) -> ResultTable:
    """JSON answers: {"columns": [...], "rows": [[token, ...], ...]} or a
    list of {column: token} objects."""
    doc = json.loads(text)
    if isinstance(doc, dict):
        columns = list(doc["columns"])
        rows = [
            tuple(
                parse_term_token(str(cell), prefixes) if cell is not None else None
                for cell in row
            )
            for row in doc["rows"]
        ]
        return ResultTable(columns, rows)
    if isinstance(doc, list):
        columns = list(doc[0].keys()) if doc else []
        rows = [
            tuple(
                parse_term_token(str(obj[c]), prefixes) if obj.get(c) is not None else None
                for c in columns
            )
            for obj in doc
        ]
        return ResultTable(columns, rows)
    raise ValueError("unrecognized expected-answer JSON shape")


def load_expected_file(path: str, prefixes: PrefixMap | None = None) -> ResultTable:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json"):
        return load_expected_json(text, prefixes)
    return load_expected_csv(text, prefixes)
