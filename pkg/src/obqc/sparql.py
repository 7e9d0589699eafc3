"""Parser for the SPARQL SELECT subset that LLM query generators emit.

The parser produces a `QueryAst` whose triple patterns are tagged with the
syntactic context they appear under (base, OPTIONAL, UNION, MINUS,
FILTER NOT EXISTS, subquery). FILTER and BIND expressions are retained as
opaque text; only FILTER [NOT] EXISTS groups are opened up, because their
patterns still constrain the query. Markdown code fences around the query
are stripped before parsing, since LLM output often carries them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Union

from .rdf import (
    RDF_TYPE,
    XSD_NS,
    ParseError,
    PrefixMap,
    Term,
    Token,
    Tokenizer,
    bnode,
    escape_literal,
    iri,
    literal,
)


class SparqlParseError(ParseError):
    """Query text outside the supported SELECT grammar."""


class UnsupportedFeatureError(SparqlParseError):
    """Recognized but deliberately unsupported SPARQL feature."""

    def __init__(self, feature: str, line: int = 0, column: int = 0) -> None:
        self.feature = feature
        super().__init__(f"unsupported feature: {feature}", line, column)


class ContextFlag(Enum):
    BASE = "base"
    OPTIONAL = "optional"
    UNION = "union"
    MINUS = "minus"
    FILTER_NOT_EXISTS = "filter_not_exists"
    SUBQUERY = "subquery"


@dataclass(frozen=True)
class Context:
    """The set of pattern-group flags a triple pattern sits under."""

    flags: frozenset

    @staticmethod
    def of(flags) -> "Context":
        flags = frozenset(flags) - {ContextFlag.BASE}
        return Context(flags if flags else frozenset({ContextFlag.BASE}))

    @property
    def is_base(self) -> bool:
        return self.flags == frozenset({ContextFlag.BASE})

    def __contains__(self, flag: ContextFlag) -> bool:
        return flag in self.flags


BASE_CONTEXT = Context.of(())


@dataclass(frozen=True)
class Variable:
    """A SPARQL variable, name stored without the ? sigil."""

    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Term, Variable]


@dataclass(frozen=True)
class TriplePattern:
    s: PatternTerm
    p: PatternTerm
    o: PatternTerm
    context: Context = BASE_CONTEXT

    def variables(self) -> Iterator[str]:
        for part in (self.s, self.p, self.o):
            if isinstance(part, Variable):
                yield part.name


class ProjectionKind(Enum):
    VARIABLE = "variable"
    EXPRESSION = "expression"


@dataclass(frozen=True)
class Projection:
    kind: ProjectionKind
    name: str
    expression_text: str | None = None


@dataclass
class RawFilter:
    """FILTER constraint kept as source text; its logic is not analyzed."""

    text: str


@dataclass
class RawBind:
    text: str
    alias: str


@dataclass
class InlineValues:
    variables: list[str]
    rows: list[list[str]]
    text: str


@dataclass
class GroupPattern:
    elements: list = field(default_factory=list)


@dataclass
class OptionalBlock:
    group: GroupPattern


@dataclass
class MinusBlock:
    group: GroupPattern


@dataclass
class UnionBlock:
    branches: list[GroupPattern]


@dataclass
class NotExistsFilter:
    group: GroupPattern
    negated: bool = True


@dataclass
class GraphScope:
    name: str
    group: GroupPattern


@dataclass
class Subquery:
    ast: "QueryAst"


@dataclass
class QueryAst:
    """Parsed SELECT query: projection, context-tagged pattern, modifiers."""

    prefixes: PrefixMap
    declared_prefixes: dict[str, str]
    projection: list[Projection]
    select_all: bool
    distinct: bool
    reduced: bool
    pattern: GroupPattern
    trailing: str = ""
    notices: list[str] = field(default_factory=list)
    source: str = ""

    def to_text(self) -> str:
        return serialize_query(self)


_FENCE_RE = re.compile(r"^\s*```[^\n]*\n(.*?)\n?\s*```\s*$", re.DOTALL)

_KEYWORDS = {
    "SELECT", "DISTINCT", "REDUCED", "WHERE", "OPTIONAL", "UNION", "MINUS",
    "FILTER", "NOT", "EXISTS", "BIND", "AS", "VALUES", "GRAPH", "SERVICE",
    "PREFIX", "BASE", "ASK", "CONSTRUCT", "DESCRIBE", "ORDER", "GROUP",
    "HAVING", "BY", "LIMIT", "OFFSET", "ASC", "DESC", "UNDEF",
    "COUNT", "SUM", "AVG", "MIN", "MAX", "SAMPLE", "GROUP_CONCAT",
}

_MODIFIER_HEADS = {"ORDER", "GROUP", "HAVING", "LIMIT", "OFFSET"}

_VAR_RE = re.compile(r"[?$]([A-Za-z_][\w]*)")
_WORD_RE = re.compile(r"[A-Za-z][A-Za-z_\d]*")
_IRIREF_AHEAD = re.compile(r'<[^<>"{}|^`\\\x00-\x20]*>')
_AS_ALIAS_RE = re.compile(r"\bAS\s*[?$]([A-Za-z_][\w]*)\s*\)?\s*$", re.IGNORECASE)


def strip_code_fences(text: str) -> str:
    """Drop a single surrounding Markdown code fence, if present."""
    m = _FENCE_RE.match(text)
    return m.group(1) if m else text


class _SparqlTokenizer(Tokenizer):
    """Extends the Turtle scanner with variables, keywords and operators.

    Bare words that are neither keywords nor Turtle specials come back as
    WORD tokens instead of errors, so FILTER bodies containing builtin
    calls (regex, bound, str, ...) can be skipped over verbatim.
    """

    def _next_impl(self) -> Token:
        line, col = self.line, self.col
        text, pos = self.text, self.pos
        if pos >= len(text):
            return super()._next_impl()
        m = _VAR_RE.match(text, pos)
        if m:
            self._advance(m.end() - pos)
            return Token("VAR", m.group(1), line, col)
        m = _WORD_RE.match(text, pos)
        if m and text[m.end() : m.end() + 1] != ":":
            w = m.group(0)
            if w.upper() in _KEYWORDS:
                self._advance(len(w))
                return Token("KEYWORD", w.upper(), line, col)
            if w not in ("a", "true", "false"):
                self._advance(len(w))
                return Token("WORD", w, line, col)
        c = text[pos]
        if c == "<" and not _IRIREF_AHEAD.match(text, pos):
            two = text[pos : pos + 2]
            op = two if two == "<=" else "<"
            self._advance(len(op))
            return Token("OP", op, line, col)
        if c == "^" and text[pos : pos + 2] != "^^":
            self._advance(1)
            return Token("OP", "^", line, col)
        if c == "?" or c == "$":
            self._advance(1)
            return Token("OP", c, line, col)
        if c in "*/|=!>&" or (c in "+-" and not text[pos + 1 : pos + 2].isdigit()):
            two = text[pos : pos + 2]
            if two in ("!=", ">=", "&&", "||"):
                self._advance(2)
                return Token("OP", two, line, col)
            self._advance(1)
            return Token("OP", c, line, col)
        return super()._next_impl()


class _QueryParser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tok = _SparqlTokenizer(text)
        self.prefixes = PrefixMap()
        self.declared: dict[str, str] = {}
        self.base: str | None = None
        self.notices: list[str] = []
        self._bnode_counter = 0
        self.current: Token = self.tok.next()

    # -- token helpers ------------------------------------------------

    def _next(self) -> Token:
        self.current = self.tok.next()
        return self.current

    def _err(self, message: str) -> SparqlParseError:
        t = self.current
        return SparqlParseError(message, t.line, t.col)

    def _expect_punct(self, value: str) -> None:
        if self.current.typ != value:
            raise self._err(f"expected {value!r}, found {self.current.value!r}")
        self._next()

    def _at_keyword(self, *words: str) -> bool:
        return self.current.typ == "KEYWORD" and self.current.value in words

    def _fresh_bnode(self) -> Term:
        self._bnode_counter += 1
        return bnode(f"qb{self._bnode_counter}")

    # -- entry --------------------------------------------------------

    def parse(self) -> QueryAst:
        self._prologue()
        if self._at_keyword("ASK", "CONSTRUCT", "DESCRIBE"):
            raise UnsupportedFeatureError(
                f"{self.current.value} query (only SELECT is supported)",
                self.current.line,
                self.current.col,
            )
        if not self._at_keyword("SELECT"):
            raise self._err("expected a SELECT query")
        projection, select_all, distinct, reduced = self._select_clause()
        if self._at_keyword("WHERE"):
            self._next()
        group = self._group_graph_pattern(frozenset())
        trailing = self._solution_modifiers()
        if self.current.typ != "EOF":
            raise self._err(f"unexpected trailing token {self.current.value!r}")
        ast = QueryAst(
            prefixes=self.prefixes,
            declared_prefixes=self.declared,
            projection=projection,
            select_all=select_all,
            distinct=distinct,
            reduced=reduced,
            pattern=group,
            trailing=trailing,
            notices=self.notices,
            source=self.text,
        )
        _check_projection(ast)
        return ast

    def _prologue(self) -> None:
        while self._at_keyword("PREFIX", "BASE"):
            kind = self.current.value
            self._next()
            if kind == "PREFIX":
                if self.current.typ != "PNAME":
                    raise self._err("expected prefix label after PREFIX")
                label = self.current.value
                prefix = label[:-1] if label.endswith(":") else label.split(":")[0]
                self._next()
                if self.current.typ != "IRIREF":
                    raise self._err("expected namespace IRI after prefix label")
                self.prefixes.bind(prefix, self.current.value)
                self.declared[prefix] = self.current.value
                self._next()
            else:
                if self.current.typ != "IRIREF":
                    raise self._err("expected IRI after BASE")
                self.base = self.current.value
                self._next()

    def _select_clause(self) -> tuple[list[Projection], bool, bool, bool]:
        self._next()  # past SELECT
        distinct = reduced = select_all = False
        if self._at_keyword("DISTINCT"):
            distinct = True
            self._next()
        elif self._at_keyword("REDUCED"):
            reduced = True
            self._next()
        projection: list[Projection] = []
        seen: set[str] = set()
        while True:
            t = self.current
            if t.typ == "OP" and t.value == "*":
                select_all = True
                self._next()
                break
            if t.typ == "VAR":
                if t.value not in seen:
                    projection.append(Projection(ProjectionKind.VARIABLE, t.value))
                    seen.add(t.value)
                self._next()
                continue
            if t.typ == "(":
                expr_text, alias = self._parenthesized_projection()
                if alias not in seen:
                    projection.append(Projection(ProjectionKind.EXPRESSION, alias, expr_text))
                    seen.add(alias)
                continue
            break
        if not projection and not select_all:
            raise self._err("SELECT clause names no variables")
        return projection, select_all, distinct, reduced

    def _parenthesized_projection(self) -> tuple[str, str]:
        start = self.current.span[0]
        end = self._skip_balanced("(", ")")
        raw = self.text[start:end]
        m = _AS_ALIAS_RE.search(raw[:-1])
        if not m:
            raise self._err("expression projection needs an AS ?alias")
        inner = raw[1 : m.start()].strip()
        return inner, m.group(1)

    def _skip_balanced(self, open_c: str, close_c: str) -> int:
        """Consume a balanced bracket run, returning the end offset."""
        if self.current.typ != open_c:
            raise self._err(f"expected {open_c!r}")
        depth = 0
        while True:
            if self.current.typ == "EOF":
                raise self._err(f"unbalanced {open_c!r}")
            if self.current.typ == open_c:
                depth += 1
            elif self.current.typ == close_c:
                depth -= 1
                if depth == 0:
                    end = self.current.span[1]
                    self._next()
                    return end
            self._next()

    # -- group graph pattern -------------------------------------------

    def _group_graph_pattern(self, flags: frozenset) -> GroupPattern:
        self._expect_punct("{")
        group = GroupPattern()
        while True:
            t = self.current
            if t.typ == "}":
                self._next()
                return group
            if t.typ == "EOF":
                raise self._err("unterminated group pattern")
            if t.typ == ".":
                self._next()
                continue
            if self._at_keyword("OPTIONAL"):
                self._next()
                inner = self._group_graph_pattern(flags | {ContextFlag.OPTIONAL})
                group.elements.append(OptionalBlock(inner))
                continue
            if self._at_keyword("MINUS"):
                self._next()
                inner = self._group_graph_pattern(flags | {ContextFlag.MINUS})
                group.elements.append(MinusBlock(inner))
                continue
            if self._at_keyword("FILTER"):
                group.elements.append(self._filter(flags))
                continue
            if self._at_keyword("BIND"):
                self._next()
                start = self.current.span[0]
                end = self._skip_balanced("(", ")")
                raw = self.text[start:end]
                m = _AS_ALIAS_RE.search(raw)
                if not m:
                    raise self._err("BIND needs an AS ?alias")
                group.elements.append(RawBind(raw, m.group(1)))
                continue
            if self._at_keyword("VALUES"):
                group.elements.append(self._values())
                continue
            if self._at_keyword("GRAPH"):
                group.elements.append(self._graph_scope(flags))
                continue
            if self._at_keyword("SERVICE"):
                raise UnsupportedFeatureError("SERVICE (federated query)", t.line, t.col)
            if t.typ == "{":
                group.elements.append(self._group_or_union_or_subquery(flags))
                continue
            self._triples_block(group, flags)

    def _filter(self, flags: frozenset):
        kw = self.current
        self._next()
        negated = False
        if self._at_keyword("NOT"):
            self._next()
            if not self._at_keyword("EXISTS"):
                raise self._err("expected EXISTS after NOT")
            negated = True
        if self._at_keyword("EXISTS"):
            self._next()
            inner = self._group_graph_pattern(flags | {ContextFlag.FILTER_NOT_EXISTS})
            return NotExistsFilter(inner, negated=negated)
        # Plain constraint: (expr), builtin(args) or !builtin(args); kept verbatim.
        if self.current.typ == "(":
            start = self.current.span[0]
            end = self._skip_balanced("(", ")")
            return RawFilter(self.text[start:end])
        start = self.current.span[0]
        while self.current.typ == "OP" and self.current.value == "!":
            self._next()
        if self.current.typ in ("PNAME", "IRIREF", "KEYWORD", "WORD"):
            self._next()
            if self.current.typ != "(":
                raise SparqlParseError("expected ( in FILTER constraint", kw.line, kw.col)
            end = self._skip_balanced("(", ")")
            return RawFilter(self.text[start:end])
        raise self._err("malformed FILTER")

    def _values(self) -> InlineValues:
        start = self.current.span[0]
        self._next()
        variables: list[str] = []
        if self.current.typ == "VAR":
            variables.append(self.current.value)
            self._next()
        elif self.current.typ == "(":
            self._next()
            while self.current.typ == "VAR":
                variables.append(self.current.value)
                self._next()
            self._expect_punct(")")
        else:
            raise self._err("expected variables after VALUES")
        if self.current.typ != "{":
            raise self._err("expected { in VALUES block")
        self._next()
        rows: list[list[str]] = []
        while self.current.typ != "}":
            if self.current.typ == "EOF":
                raise self._err("unterminated VALUES block")
            if self.current.typ == "(":
                self._next()
                row: list[str] = []
                while self.current.typ != ")":
                    if self.current.typ == "EOF":
                        raise self._err("unterminated VALUES row")
                    row.append(self._values_cell())
                self._next()
                rows.append(row)
            else:
                rows.append([self._values_cell()])
            if len(rows) > 64:
                raise UnsupportedFeatureError(
                    "VALUES with more than 64 rows", self.current.line, self.current.col
                )
        end = self.current.span[1]
        self._next()
        return InlineValues(variables, rows, self.text[start:end])

    def _values_cell(self) -> str:
        t = self.current
        if t.typ == "KEYWORD" and t.value == "UNDEF":
            self._next()
            return "UNDEF"
        term = self._term_or_var(allow_var=False)
        return _render_pattern_term(term, self.prefixes)

    def _graph_scope(self, flags: frozenset) -> GraphScope:
        self._next()
        t = self.current
        if t.typ == "VAR":
            name = f"?{t.value}"
        elif t.typ == "IRIREF":
            name = f"<{t.value}>"
        elif t.typ == "PNAME":
            name = t.value
        else:
            raise self._err("expected graph name after GRAPH")
        self._next()
        self.notices.append(
            f"GRAPH clause with name {name}: patterns are checked, the graph name is ignored"
        )
        inner = self._group_graph_pattern(flags)
        return GraphScope(name, inner)

    def _group_or_union_or_subquery(self, flags: frozenset):
        first = self._braced_operand(flags)
        if not self._at_keyword("UNION"):
            return first
        first_group = first if isinstance(first, GroupPattern) else GroupPattern([first])
        _retag(first_group, {ContextFlag.UNION})
        branches = [first_group]
        while self._at_keyword("UNION"):
            self._next()
            if self.current.typ != "{":
                raise self._err("expected { after UNION")
            nxt = self._braced_operand(flags | {ContextFlag.UNION})
            branches.append(nxt if isinstance(nxt, GroupPattern) else GroupPattern([nxt]))
        return UnionBlock(branches)

    def _braced_operand(self, flags: frozenset):
        """Parse `{ ... }`, which is either a nested group or a subquery."""
        save_pos = self.tok.pos
        save_line, save_col = self.tok.line, self.tok.col
        save_tok = self.current
        self._next()
        if self._at_keyword("SELECT"):
            sub = self._subselect(flags | {ContextFlag.SUBQUERY})
            return Subquery(sub)
        self.tok.pos = save_pos
        self.tok.line, self.tok.col = save_line, save_col
        self.current = save_tok
        return self._group_graph_pattern(flags)

    def _subselect(self, flags: frozenset) -> "QueryAst":
        projection, select_all, distinct, reduced = self._select_clause()
        if self._at_keyword("WHERE"):
            self._next()
        group = self._group_graph_pattern(flags)
        trailing = self._solution_modifiers(stop_at_brace=True)
        self._expect_punct("}")
        return QueryAst(
            prefixes=self.prefixes,
            declared_prefixes={},
            projection=projection,
            select_all=select_all,
            distinct=distinct,
            reduced=reduced,
            pattern=group,
            trailing=trailing,
        )

    def _solution_modifiers(self, stop_at_brace: bool = False) -> str:
        if not (self.current.typ == "KEYWORD" and self.current.value in _MODIFIER_HEADS):
            return ""
        start = self.current.span[0]
        end = start
        while self.current.typ != "EOF":
            if stop_at_brace and self.current.typ == "}":
                break
            end = self.current.span[1]
            self._next()
        return self.text[start:end].strip()

    # -- triples ------------------------------------------------------

    def _triples_block(self, group: GroupPattern, flags: frozenset) -> None:
        t = self.current
        if t.typ == "[":
            self._next()
            subject: PatternTerm = self._fresh_bnode()
            if self.current.typ != "]":
                self._predicate_object_list(group, subject, flags)
            self._expect_punct("]")
            if self.current.typ in (".", "}"):
                if self.current.typ == ".":
                    self._next()
                return
        else:
            subject = self._term_or_var(allow_literal=False)
        self._predicate_object_list(group, subject, flags)
        if self.current.typ == ".":
            self._next()

    def _predicate_object_list(self, group: GroupPattern, subject: PatternTerm, flags: frozenset) -> None:
        context = Context.of(flags)
        while True:
            predicate = self._verb()
            self._reject_property_path()
            while True:
                obj = self._term_or_var(inner_group=group, flags=flags)
                group.elements.append(TriplePattern(subject, predicate, obj, context))
                if self.current.typ == ",":
                    self._next()
                    continue
                break
            if self.current.typ == ";":
                self._next()
                if self.current.typ in (".", "}", "]", ";"):
                    while self.current.typ == ";":
                        self._next()
                    return
                continue
            return

    def _verb(self) -> PatternTerm:
        t = self.current
        if t.typ == "A":
            self._next()
            return iri(RDF_TYPE)
        if t.typ == "VAR":
            self._next()
            return Variable(t.value)
        if t.typ == "IRIREF":
            self._next()
            return iri(t.value)
        if t.typ == "PNAME":
            self._next()
            return iri(self.prefixes.expand(t.value))
        if (t.typ == "OP" and t.value in ("^", "!")) or t.typ == "(":
            raise UnsupportedFeatureError("property paths", t.line, t.col)
        raise self._err(f"expected predicate, found {t.value!r}")

    def _reject_property_path(self) -> None:
        t = self.current
        if t.typ == "OP" and t.value in ("/", "|", "*", "+", "^", "?"):
            raise UnsupportedFeatureError("property paths", t.line, t.col)

    def _term_or_var(
        self,
        allow_literal: bool = True,
        allow_var: bool = True,
        inner_group: GroupPattern | None = None,
        flags: frozenset = frozenset(),
    ) -> PatternTerm:
        t = self.current
        if t.typ == "VAR":
            if not allow_var:
                raise self._err("variable not allowed here")
            self._next()
            return Variable(t.value)
        if t.typ == "IRIREF":
            self._next()
            return iri(t.value)
        if t.typ == "PNAME":
            self._next()
            return iri(self.prefixes.expand(t.value))
        if t.typ == "BLANK":
            self._next()
            return bnode(t.value)
        if t.typ == "[":
            if inner_group is None:
                raise self._err("blank node property list not allowed here")
            self._next()
            node = self._fresh_bnode()
            if self.current.typ != "]":
                self._predicate_object_list(inner_group, node, flags)
            self._expect_punct("]")
            return node
        if t.typ == "STRING" and allow_literal:
            self._next()
            if self.current.typ == "LANGTAG":
                lang = self.current.value
                self._next()
                return literal(t.value, language=lang)
            if self.current.typ == "DATATYPE_SEP":
                self._next()
                dt = self.current
                if dt.typ == "IRIREF":
                    self._next()
                    return literal(t.value, datatype=dt.value)
                if dt.typ == "PNAME":
                    self._next()
                    return literal(t.value, datatype=self.prefixes.expand(dt.value))
                raise self._err("expected datatype IRI after ^^")
            return literal(t.value)
        if t.typ == "NUMBER" and allow_literal:
            self._next()
            return _number_term(t.value)
        if t.typ == "BOOL" and allow_literal:
            self._next()
            return literal(t.value, datatype=XSD_NS + "boolean")
        raise self._err(f"expected term, found {t.value!r}")


def _number_term(text: str) -> Term:
    if re.fullmatch(r"[+-]?\d+", text):
        return literal(text, datatype=XSD_NS + "integer")
    if "e" in text or "E" in text:
        return literal(text, datatype=XSD_NS + "double")
    return literal(text, datatype=XSD_NS + "decimal")


def _retag(group: GroupPattern, extra: set) -> None:
    """Add context flags to every triple pattern under a parsed subtree."""
    for i, el in enumerate(group.elements):
        if isinstance(el, TriplePattern):
            group.elements[i] = TriplePattern(
                el.s, el.p, el.o, Context.of(el.context.flags | frozenset(extra))
            )
        elif isinstance(el, GroupPattern):
            _retag(el, extra)
        elif isinstance(el, (OptionalBlock, MinusBlock, NotExistsFilter, GraphScope)):
            _retag(el.group, extra)
        elif isinstance(el, UnionBlock):
            for b in el.branches:
                _retag(b, extra)
        elif isinstance(el, Subquery):
            _retag(el.ast.pattern, extra)


def _check_projection(ast: QueryAst) -> None:
    if ast.select_all:
        return
    bound = set(_pattern_variable_names(ast.pattern))
    for proj in ast.projection:
        if proj.kind is ProjectionKind.VARIABLE and proj.name not in bound:
            ast.notices.append(
                f"projected variable ?{proj.name} is not bound in the query pattern"
            )


def _pattern_variable_names(group: GroupPattern) -> Iterator[str]:
    """Variable names in first-occurrence order, including BIND/VALUES aliases."""
    for el in group.elements:
        if isinstance(el, TriplePattern):
            yield from el.variables()
        elif isinstance(el, GroupPattern):
            yield from _pattern_variable_names(el)
        elif isinstance(el, (OptionalBlock, MinusBlock, NotExistsFilter, GraphScope)):
            yield from _pattern_variable_names(el.group)
        elif isinstance(el, UnionBlock):
            for b in el.branches:
                yield from _pattern_variable_names(b)
        elif isinstance(el, Subquery):
            # A subquery exports only its projection.
            yield from projected_variables(el.ast)
        elif isinstance(el, RawBind):
            yield el.alias
        elif isinstance(el, InlineValues):
            yield from el.variables


def parse_query(text: str) -> QueryAst:
    """Parse a SPARQL SELECT query (code fences tolerated) into an AST."""
    stripped = strip_code_fences(text).strip()
    if not stripped:
        raise SparqlParseError("empty query text", 1, 1)
    return _QueryParser(stripped).parse()


def extract_bgps(ast: QueryAst) -> list[TriplePattern]:
    """Every triple pattern in the query, in document order, context-tagged.

    Patterns under OPTIONAL, UNION, MINUS, FILTER NOT EXISTS and subqueries
    are all included; FILTER and BIND expressions and the SELECT structure
    contribute nothing.
    """
    out: list[TriplePattern] = []

    def walk(group: GroupPattern) -> None:
        for el in group.elements:
            if isinstance(el, TriplePattern):
                out.append(el)
            elif isinstance(el, GroupPattern):
                walk(el)
            elif isinstance(el, (OptionalBlock, MinusBlock, NotExistsFilter, GraphScope)):
                walk(el.group)
            elif isinstance(el, UnionBlock):
                for b in el.branches:
                    walk(b)
            elif isinstance(el, Subquery):
                walk(el.ast.pattern)

    walk(ast.pattern)
    return out


def projected_variables(ast: QueryAst) -> list[str]:
    """Ordered, deduplicated projection names; SELECT * expands to all
    pattern variables in first-occurrence order."""
    if ast.select_all:
        seen: list[str] = []
        for name in _pattern_variable_names(ast.pattern):
            if name not in seen:
                seen.append(name)
        return seen
    out: list[str] = []
    for proj in ast.projection:
        if proj.name not in out:
            out.append(proj.name)
    return out


# ---------------------------------------------------------------------------
# Reserialization.


def _render_pattern_term(term: PatternTerm, prefixes: PrefixMap) -> str:
    if isinstance(term, Variable):
        return f"?{term.name}"
    if term.is_iri:
        if term.value == RDF_TYPE:
            return "a"
        compact = prefixes.compact(term.value)
        return compact if compact else f"<{term.value}>"
    if term.is_blank:
        return f"_:{term.value}"
    if term.is_literal and term.datatype and term.datatype.startswith(XSD_NS):
        short = prefixes.compact(term.datatype)
        if short:
            return f'"{escape_literal(term.value)}"^^{short}'
    return term.nq()


def serialize_query(ast: QueryAst) -> str:
    """Render the AST back to SPARQL text, semantics-preserving for the
    supported subset."""
    lines: list[str] = []
    for prefix, ns in ast.declared_prefixes.items():
        lines.append(f"PREFIX {prefix}: <{ns}>")
    head = "SELECT"
    if ast.distinct:
        head += " DISTINCT"
    elif ast.reduced:
        head += " REDUCED"
    if ast.select_all:
        head += " *"
    else:
        for proj in ast.projection:
            if proj.kind is ProjectionKind.VARIABLE:
                head += f" ?{proj.name}"
            else:
                head += f" ({proj.expression_text} AS ?{proj.name})"
    lines.append(head)
    lines.append("WHERE " + _render_group(ast.pattern, ast.prefixes, indent=0))
    if ast.trailing:
        lines.append(ast.trailing)
    return "\n".join(lines) + "\n"


def _render_group(group: GroupPattern, prefixes: PrefixMap, indent: int) -> str:
    pad = "  " * (indent + 1)
    out = ["{"]
    for el in group.elements:
        if isinstance(el, TriplePattern):
            s = _render_pattern_term(el.s, prefixes)
            p = _render_pattern_term(el.p, prefixes)
            o = _render_pattern_term(el.o, prefixes)
            out.append(f"{pad}{s} {p} {o} .")
        elif isinstance(el, GroupPattern):
            out.append(pad + _render_group(el, prefixes, indent + 1))
        elif isinstance(el, OptionalBlock):
            out.append(f"{pad}OPTIONAL " + _render_group(el.group, prefixes, indent + 1))
        elif isinstance(el, MinusBlock):
            out.append(f"{pad}MINUS " + _render_group(el.group, prefixes, indent + 1))
        elif isinstance(el, NotExistsFilter):
            kw = "FILTER NOT EXISTS " if el.negated else "FILTER EXISTS "
            out.append(pad + kw + _render_group(el.group, prefixes, indent + 1))
        elif isinstance(el, GraphScope):
            out.append(f"{pad}GRAPH {el.name} " + _render_group(el.group, prefixes, indent + 1))
        elif isinstance(el, UnionBlock):
            rendered = [_render_group(b, prefixes, indent + 1) for b in el.branches]
            out.append(pad + " UNION ".join(rendered))
        elif isinstance(el, Subquery):
            sub = serialize_query(el.ast).rstrip("\n")
            inner = "\n".join(pad + "  " + line for line in sub.splitlines())
            out.append(f"{pad}{{\n{inner}\n{pad}}}")
        elif isinstance(el, RawFilter):
            out.append(f"{pad}FILTER {el.text}")
        elif isinstance(el, RawBind):
            out.append(f"{pad}BIND {el.text}")
        elif isinstance(el, InlineValues):
            out.append(pad + el.text)
    out.append("  " * indent + "}")
    return "\n".join(out)
