"""Immutable RDF data model, prefix management, and a Turtle/N-Quads subset.

Everything downstream (query skolemization, rule evaluation, the executor)
works over the types defined here: `Term`, `Triple`, `Quad`, `PrefixMap`
and `Graph`. The Turtle reader covers the subset real ontology files use:
prefix declarations, the `a` keyword, predicate lists (`;`), object lists
(`,`), IRIs, prefixed names, plain/typed/language-tagged literals, blank
node labels and `[...]` property lists. Anything outside that subset is a
loud parse error, never a silent skip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional
from urllib.parse import urljoin

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
OWL_NS = "http://www.w3.org/2002/07/owl#"
SKOS_NS = "http://www.w3.org/2004/02/skos/core#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"

# Reserved namespace for skolemized query variables. A tag: URI cannot
# collide with data IRIs; the trailing slash lets the local name be
# recovered by stripping up to the last / or #.
QUERY_VAR_NS = "tag:obqc,2024:var/"

RDF_TYPE = RDF_NS + "type"
RDFS_SUBCLASSOF = RDFS_NS + "subClassOf"
RDFS_DOMAIN = RDFS_NS + "domain"
RDFS_RANGE = RDFS_NS + "range"
RDFS_LABEL = RDFS_NS + "label"
OWL_IMPORTS = OWL_NS + "imports"

_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


class TermKind(Enum):
    IRI = "iri"
    LITERAL = "literal"
    BLANK = "blank"


@dataclass(frozen=True)
class Term:
    """An RDF term: IRI, literal, or blank node.

    Equality is structural (kind, value, datatype, language). A literal
    carries at most one of datatype / language.
    """

    kind: TermKind
    value: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind is not TermKind.LITERAL and (self.datatype or self.language):
            raise ValueError("datatype/language are only valid on literals")
        if self.datatype is not None and self.language is not None:
            raise ValueError("a literal has at most one of datatype, language")

    @property
    def is_iri(self) -> bool:
        return self.kind is TermKind.IRI

    @property
    def is_literal(self) -> bool:
        return self.kind is TermKind.LITERAL

    @property
    def is_blank(self) -> bool:
        return self.kind is TermKind.BLANK

    def nq(self) -> str:
        """N-Quads token for this term; also the canonical sort key."""
        if self.kind is TermKind.IRI:
            return f"<{self.value}>"
        if self.kind is TermKind.BLANK:
            return f"_:{self.value}"
        lex = escape_literal(self.value)
        if self.language:
            return f'"{lex}"@{self.language}'
        if self.datatype:
            return f'"{lex}"^^<{self.datatype}>'
        return f'"{lex}"'

    def __repr__(self) -> str:
        return f"Term({self.nq()})"


def iri(value: str) -> Term:
    return Term(TermKind.IRI, value)


def literal(value: str, datatype: str | None = None, language: str | None = None) -> Term:
    return Term(TermKind.LITERAL, value, datatype, language)


def bnode(label: str) -> Term:
    return Term(TermKind.BLANK, label)


@dataclass(frozen=True)
class Triple:
    """One RDF statement. Predicate must be an IRI; subject must not be a literal."""

    s: Term
    p: Term
    o: Term

    def __post_init__(self) -> None:
        if self.p.kind is not TermKind.IRI:
            raise ValueError(f"triple predicate must be an IRI, got {self.p!r}")
        if self.s.kind is TermKind.LITERAL:
            raise ValueError("triple subject must not be a literal")

    def sort_key(self) -> tuple[str, str, str]:
        return (self.s.nq(), self.p.nq(), self.o.nq())


@dataclass(frozen=True)
class Quad:
    """A triple placed in a named graph."""

    triple: Triple
    graph: Term

    def __post_init__(self) -> None:
        if self.graph.kind is not TermKind.IRI:
            raise ValueError("graph name must be an IRI")

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.graph.nq(),) + self.triple.sort_key()


class PrefixMap:
    """Prefix label to namespace IRI bindings.

    The reserved prefixes rdf:, rdfs:, owl:, skos:, xsd: and qq: are always
    present; document declarations may rebind them.
    """

    _DEFAULTS = {
        "rdf": RDF_NS,
        "rdfs": RDFS_NS,
        "owl": OWL_NS,
        "skos": SKOS_NS,
        "xsd": XSD_NS,
        "qq": QUERY_VAR_NS,
    }

    def __init__(self, bindings: dict[str, str] | None = None) -> None:
        self._bindings: dict[str, str] = dict(self._DEFAULTS)
        if bindings:
            self._bindings.update(bindings)

    def bind(self, prefix: str, namespace: str) -> None:
        self._bindings[prefix] = namespace

    def namespace(self, prefix: str) -> str | None:
        return self._bindings.get(prefix)

    def bindings(self) -> dict[str, str]:
        return dict(self._bindings)

    def copy(self) -> "PrefixMap":
        return PrefixMap(self._bindings)

    def expand(self, prefixed: str) -> str:
        """Expand `pfx:local` (or `:local`) to a full IRI."""
        prefix, sep, local = prefixed.partition(":")
        if not sep:
            raise UnknownPrefixError(f"not a prefixed name: {prefixed!r}")
        ns = self._bindings.get(prefix)
        if ns is None:
            raise UnknownPrefixError(f"undeclared prefix: {prefix!r}")
        return ns + local

    def compact(self, iri_text: str) -> str | None:
        """Compact an IRI to `pfx:local` if a declared namespace matches.

        Longest namespace wins; ties break on the prefix label so the
        result is deterministic. Returns None when no namespace matches or
        the remainder would not be a sane local name.
        """
        best: tuple[int, str] | None = None
        for prefix, ns in self._bindings.items():
            if ns and iri_text.startswith(ns):
                cand = (len(ns), prefix)
                if best is None or cand[0] > best[0] or (cand[0] == best[0] and prefix < best[1]):
                    best = cand
        if best is None:
            return None
        ns_len, prefix = best
        local = iri_text[ns_len:]
        if any(c in local for c in "/#:<>\"{}|^`\\ "):
            return None
        return f"{prefix}:{local}"

    def __contains__(self, prefix: str) -> bool:
        return prefix in self._bindings

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PrefixMap) and self._bindings == other._bindings


class Graph:
    """A set of triples with deterministic (lexicographic) iteration order."""

    def __init__(self, triples: Iterable[Triple] = ()) -> None:
        self._triples: set[Triple] = set(triples)
        self._sorted: list[Triple] | None = None

    def add(self, t: Triple) -> None:
        if t not in self._triples:
            self._triples.add(t)
            self._sorted = None

    def update(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            self.add(t)

    def match(
        self,
        s: Term | None = None,
        p: Term | None = None,
        o: Term | None = None,
    ) -> Iterator[Triple]:
        """Triples matching the given pattern; None is a wildcard."""
        for t in self:
            if s is not None and t.s != s:
                continue
            if p is not None and t.p != p:
                continue
            if o is not None and t.o != o:
                continue
            yield t

    def __iter__(self) -> Iterator[Triple]:
        # Lazy sort cache; concurrent first iterations may both compute it,
        # which is harmless since the results are identical.
        if self._sorted is None:
            self._sorted = sorted(self._triples, key=Triple.sort_key)
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Graph) and self._triples == other._triples

    def __repr__(self) -> str:
        return f"Graph({len(self)} triples)"


class ParseError(Exception):
    """Malformed Turtle/N-Quads input, with a 1-based source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        self.message = message
        self.line = line
        self.column = column
        where = f" at line {line}, column {column}" if line else ""
        super().__init__(f"{message}{where}")


class UnknownPrefixError(ParseError):
    """A prefixed name used a prefix that was never declared."""


def subclass_closure(ontology: Graph, sub: Term, super_: Term) -> bool:
    """Reflexive-transitive rdfs:subClassOf reachability.

    True iff sub equals super_ or a directed subClassOf path connects them.
    Cycles are tolerated: the visited set guarantees termination, and the
    members of a cycle are mutually reachable.
    """
    if sub == super_:
        return True
    subclassof = iri(RDFS_SUBCLASSOF)
    seen = {sub}
    frontier = [sub]
    while frontier:
        node = frontier.pop()
        for t in ontology.match(s=node, p=subclassof):
            if t.o == super_:
                return True
            if t.o not in seen:
                seen.add(t.o)
                frontier.append(t.o)
    return False


def import_notices(g: Graph) -> list[str]:
    """owl:imports statements are never followed; report them to the caller."""
    return [
        f"owl:imports is ignored: <{t.o.value if t.o.is_iri else t.o.nq()}> was not loaded"
        for t in g.match(p=iri(OWL_IMPORTS))
    ]


def load_turtle(path: str) -> tuple["Graph", "PrefixMap"]:
    """Read a UTF-8 Turtle (.ttl) file."""
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read())


def load_nquads(path: str) -> list["Quad"]:
    """Read a UTF-8 N-Quads (.nq) file."""
    with open(path, encoding="utf-8") as fh:
        return parse_nquads(fh.read())


# ---------------------------------------------------------------------------
# Literal escaping shared by the serializer and both parsers.

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "'": "'", "n": "\n", "r": "\r", "t": "\t", "b": "\b", "f": "\f"}


def escape_literal(text: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in text)


# ---------------------------------------------------------------------------
# Tokenizer shared by the Turtle and N-Quads readers.

_IRIREF_RE = re.compile(r'<([^<>"{}|^`\\\x00-\x20]*)>')
# PN_LOCAL is a pragmatic approximation: dots are allowed inside but a
# trailing dot belongs to the statement terminator.
_PNAME_RE = re.compile(r"([A-Za-z_][\w\-]*)?:([\w\-.:%]*)")
_BLANK_RE = re.compile(r"_:([A-Za-z_][\w\-.]*)")
_VAR_HEAD = re.compile(r"[?$]")
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?")
_LANGTAG_RE = re.compile(r"@([A-Za-z]+(?:-[A-Za-z0-9]+)*)")


@dataclass
class Token:
    typ: str
    value: str
    line: int
    col: int
    span: tuple[int, int] = (0, 0)


class Tokenizer:
    """Hand-rolled scanner for the Turtle/N-Quads subset."""

    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def _advance(self, n: int) -> None:
        chunk = self.text[self.pos : self.pos + n]
        newlines = chunk.count("\n")
        if newlines:
            self.line += newlines
            self.col = len(chunk) - chunk.rfind("\n")
        else:
            self.col += n
        self.pos += n

    def _skip_ws(self) -> None:
        while self.pos < len(self.text):
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance(1)
            elif c == "#":
                end = self.text.find("\n", self.pos)
                self._advance((end - self.pos) if end != -1 else len(self.text) - self.pos)
            else:
                return

    def _read_string(self) -> str:
        quote = self.text[self.pos]
        long_delim = quote * 3
        if self.text.startswith(long_delim, self.pos):
            return self._read_quoted(long_delim)
        return self._read_quoted(quote)

    def _read_quoted(self, delim: str) -> str:
        start_line, start_col = self.line, self.col
        self._advance(len(delim))
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise ParseError("unterminated string literal", start_line, start_col)
            if self.text.startswith(delim, self.pos):
                self._advance(len(delim))
                return "".join(out)
            c = self.text[self.pos]
            if c == "\\":
                esc = self.text[self.pos + 1 : self.pos + 2]
                if esc in _UNESCAPES:
                    out.append(_UNESCAPES[esc])
                    self._advance(2)
                elif esc in ("u", "U"):
                    width = 4 if esc == "u" else 8
                    digits = self.text[self.pos + 2 : self.pos + 2 + width]
                    try:
                        out.append(chr(int(digits, 16)))
                    except ValueError:
                        raise self.error(f"malformed \\{esc} escape") from None
                    self._advance(2 + width)
                else:
                    raise self.error(f"unsupported escape sequence \\{esc}")
            elif len(delim) == 1 and c in "\n\r":
                raise ParseError("newline in single-quoted literal", start_line, start_col)
            else:
                out.append(c)
                self._advance(1)

    def next(self) -> Token:
        self._skip_ws()
        start = self.pos
        tok = self._next_impl()
        tok.span = (start, self.pos)
        return tok

    def _next_impl(self) -> Token:
        line, col = self.line, self.col
        if self.pos >= len(self.text):
            return Token("EOF", "", line, col)
        text, pos = self.text, self.pos
        c = text[pos]

        if c == "<":
            m = _IRIREF_RE.match(text, pos)
            if not m:
                raise self.error("malformed IRI reference")
            self._advance(m.end() - pos)
            return Token("IRIREF", m.group(1), line, col)
        if c in "\"'":
            value = self._read_string()
            return Token("STRING", value, line, col)
        if c == "@":
            rest = text[pos:]
            for directive in ("@prefix", "@base"):
                if rest.startswith(directive) and not rest[len(directive) : len(directive) + 1].isalnum():
                    self._advance(len(directive))
                    return Token("DIRECTIVE", directive[1:], line, col)
            m = _LANGTAG_RE.match(text, pos)
            if not m:
                raise self.error("malformed language tag")
            self._advance(m.end() - pos)
            return Token("LANGTAG", m.group(1), line, col)
        if text.startswith("^^", pos):
            self._advance(2)
            return Token("DATATYPE_SEP", "^^", line, col)
        if c in ".;,[](){}":
            # A dot can also start a decimal like .5; numbers win.
            if c == "." and _NUMBER_RE.match(text, pos) and text[pos + 1 : pos + 2].isdigit():
                m = _NUMBER_RE.match(text, pos)
                self._advance(m.end() - pos)
                return Token("NUMBER", m.group(0), line, col)
            self._advance(1)
            return Token(c, c, line, col)
        if text.startswith("_:", pos):
            m = _BLANK_RE.match(text, pos)
            if not m:
                raise self.error("malformed blank node label")
            label = m.group(1).rstrip(".")
            self._advance(2 + len(label))
            return Token("BLANK", label, line, col)
        if c.isdigit() or (c in "+-" and text[pos + 1 : pos + 2].isdigit()):
            m = _NUMBER_RE.match(text, pos)
            self._advance(m.end() - pos)
            return Token("NUMBER", m.group(0), line, col)

        word = re.match(r"[A-Za-z][\w\-]*", text[pos:])
        if word:
            w = word.group(0)
            after = text[pos + len(w) : pos + len(w) + 1]
            if after != ":":
                if w == "a":
                    self._advance(1)
                    return Token("A", "a", line, col)
                if w in ("true", "false"):
                    self._advance(len(w))
                    return Token("BOOL", w, line, col)
                if w.upper() in ("PREFIX", "BASE"):
                    self._advance(len(w))
                    return Token("SPARQL_DIRECTIVE", w.lower(), line, col)
                raise self.error(f"unexpected token {w!r}")
        m = _PNAME_RE.match(text, pos)
        if m:
            name = m.group(0)
            # A trailing dot terminates the statement, it is not part of
            # the local name.
            while name.endswith("."):
                name = name[:-1]
            self._advance(len(name))
            return Token("PNAME", name, line, col)
        raise self.error(f"unexpected character {c!r}")


# ---------------------------------------------------------------------------
# Turtle reader.


class _TurtleParser:
    def __init__(self, text: str, base: str | None) -> None:
        self.tok = Tokenizer(text)
        self.base = base
        self.graph = Graph()
        self.prefixes = PrefixMap()
        self._bnode_counter = 0
        self.current: Token = self.tok.next()

    def _next(self) -> Token:
        self.current = self.tok.next()
        return self.current

    def _expect(self, typ: str) -> Token:
        t = self.current
        if t.typ != typ:
            raise ParseError(f"expected {typ}, found {t.typ} {t.value!r}", t.line, t.col)
        self._next()
        return t

    def _fresh_bnode(self) -> Term:
        self._bnode_counter += 1
        return bnode(f"gen{self._bnode_counter}")

    def _resolve(self, ref: str) -> str:
        if _SCHEME_RE.match(ref):
            return ref
        if self.base is None:
            raise ParseError(f"relative IRI <{ref}> with no base", self.current.line, self.current.col)
        return urljoin(self.base, ref)

    def parse(self) -> tuple[Graph, PrefixMap]:
        while self.current.typ != "EOF":
            if self.current.typ == "DIRECTIVE":
                self._directive(sparql_style=False)
            elif self.current.typ == "SPARQL_DIRECTIVE":
                self._directive(sparql_style=True)
            else:
                self._triples()
                self._expect(".")
        return self.graph, self.prefixes

    def _directive(self, sparql_style: bool) -> None:
        kind = self.current.value
        self._next()
        if kind == "prefix":
            pname = self._expect("PNAME")
            prefix = pname.value[:-1] if pname.value.endswith(":") else pname.value.split(":")[0]
            iri_tok = self._expect("IRIREF")
            self.prefixes.bind(prefix, self._resolve(iri_tok.value))
        else:
            iri_tok = self._expect("IRIREF")
            self.base = self._resolve(iri_tok.value)
        if not sparql_style:
            self._expect(".")

    def _triples(self) -> None:
        if self.current.typ == "[":
            subject = self._bnode_property_list()
            if self.current.typ != ".":
                self._predicate_object_list(subject)
        else:
            subject = self._subject()
            self._predicate_object_list(subject)

    def _subject(self) -> Term:
        t = self.current
        if t.typ == "IRIREF":
            self._next()
            return iri(self._resolve(t.value))
        if t.typ == "PNAME":
            self._next()
            return iri(self.prefixes.expand(t.value))
        if t.typ == "BLANK":
            self._next()
            return bnode(t.value)
        if t.typ == "(":
            raise ParseError("RDF collections are not supported", t.line, t.col)
        raise ParseError(f"expected subject, found {t.typ} {t.value!r}", t.line, t.col)

    def _verb(self) -> Term:
        t = self.current
        if t.typ == "A":
            self._next()
            return iri(RDF_TYPE)
        if t.typ == "IRIREF":
            self._next()
            return iri(self._resolve(t.value))
        if t.typ == "PNAME":
            self._next()
            return iri(self.prefixes.expand(t.value))
        raise ParseError(f"expected predicate, found {t.typ} {t.value!r}", t.line, t.col)

    def _object(self) -> Term:
        t = self.current
        if t.typ in ("IRIREF", "PNAME", "BLANK"):
            return self._subject()
        if t.typ == "STRING":
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
                    return literal(t.value, datatype=self._resolve(dt.value))
                if dt.typ == "PNAME":
                    self._next()
                    return literal(t.value, datatype=self.prefixes.expand(dt.value))
                raise ParseError("expected datatype IRI after ^^", dt.line, dt.col)
            return literal(t.value)
        if t.typ == "NUMBER":
            self._next()
            return _number_literal(t.value)
        if t.typ == "BOOL":
            self._next()
            return literal(t.value, datatype=XSD_NS + "boolean")
        if t.typ == "[":
            return self._bnode_property_list()
        if t.typ == "(":
            raise ParseError("RDF collections are not supported", t.line, t.col)
        raise ParseError(f"expected object, found {t.typ} {t.value!r}", t.line, t.col)

    def _bnode_property_list(self) -> Term:
        self._expect("[")
        node = self._fresh_bnode()
        if self.current.typ != "]":
            self._predicate_object_list(node)
        self._expect("]")
        return node

    def _predicate_object_list(self, subject: Term) -> None:
        while True:
            predicate = self._verb()
            while True:
                obj = self._object()
                self.graph.add(Triple(subject, predicate, obj))
                if self.current.typ == ",":
                    self._next()
                    continue
                break
            if self.current.typ == ";":
                self._next()
                # Trailing semicolon before . or ] is legal Turtle.
                if self.current.typ in (".", "]", ";"):
                    while self.current.typ == ";":
                        self._next()
                    return
                continue
            return


def _number_literal(text: str) -> Term:
    if re.fullmatch(r"[+-]?\d+", text):
        return literal(text, datatype=XSD_NS + "integer")
    if "e" in text or "E" in text:
        return literal(text, datatype=XSD_NS + "double")
    return literal(text, datatype=XSD_NS + "decimal")


def parse_turtle(text: str, base: str | None = None) -> tuple[Graph, PrefixMap]:
    """Parse a Turtle document into a Graph and the prefixes it declared.

    Raises ParseError (with line/column) on anything outside the supported
    subset, and UnknownPrefixError for undeclared prefixes.
    """
    return _TurtleParser(text, base).parse()


# ---------------------------------------------------------------------------
# N-Quads.


def serialize_nquads(quads: Iterable[Quad]) -> str:
    """One `<s> <p> <o> <g> .` line per quad, sorted, newline-terminated."""
    lines = [
        f"{q.triple.s.nq()} {q.triple.p.nq()} {q.triple.o.nq()} {q.graph.nq()} ."
        for q in sorted(quads, key=Quad.sort_key)
    ]
    return "".join(line + "\n" for line in lines)


def parse_nquads(text: str) -> list[Quad]:
    """Parse N-Quads lines back into quads; inverse of serialize_nquads."""
    quads: list[Quad] = []
    tok = Tokenizer(text)

    def term(t: Token) -> Term:
        if t.typ == "IRIREF":
            return iri(t.value)
        if t.typ == "BLANK":
            return bnode(t.value)
        if t.typ == "STRING":
            nxt = tok.next()
            if nxt.typ == "LANGTAG":
                return literal(t.value, language=nxt.value)
            if nxt.typ == "DATATYPE_SEP":
                dt = tok.next()
                if dt.typ != "IRIREF":
                    raise ParseError("expected datatype IRI after ^^", dt.line, dt.col)
                return literal(t.value, datatype=dt.value)
            pushback.append(nxt)
            return literal(t.value)
        raise ParseError(f"unexpected token {t.typ} {t.value!r} in N-Quads", t.line, t.col)

    pushback: list[Token] = []

    def next_token() -> Token:
        return pushback.pop() if pushback else tok.next()

    while True:
        t = next_token()
        if t.typ == "EOF":
            return quads
        s = term(t)
        p = term(next_token())
        o = term(next_token())
        g = next_token()
        if g.typ != "IRIREF":
            raise ParseError("quad graph name must be an IRI", g.line, g.col)
        dot = next_token()
        if dot.typ != ".":
            raise ParseError("expected '.' after quad", dot.line, dot.col)
        quads.append(Quad(Triple(s, p, o), iri(g.value)))
