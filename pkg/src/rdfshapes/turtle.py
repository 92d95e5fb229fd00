"""Turtle reader and writer for the subset used by the WebIndex model.

Supported: @prefix / PREFIX declarations, `a`, prefixed names, absolute
IRIs, semicolon/comma predicate-object lists, blank node property lists
`[...]`, collections `(...)`, explicit blank node labels `_:x`, string
literals with `^^datatype` or `@lang`, numeric shorthand (integer ->
xsd:integer, decimal -> xsd:decimal), `#` comments, and \\t \\n \\r \\" \\\\
\\u \\U string escapes.

Not supported (out of scope): named graphs, relative IRI resolution
against a base, triple-quoted strings.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .graph import Graph
from .terms import (
    BNode,
    Iri,
    Literal,
    RDF_FIRST,
    RDF_NIL,
    RDF_REST,
    RDF_TYPE,
    RdfTerm,
    Triple,
    XSD_DECIMAL,
    XSD_INTEGER,
    XSD_STRING,
    term_sort_key,
)


class TurtleError(ValueError):
    """Syntax or prefix error, carrying the 1-based line/column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # 'iri', 'pname', 'bnode_label', 'string', 'number', 'punct', 'keyword', 'eof'
    value: str
    line: int
    col: int


_PUNCT = {".", ";", ",", "[", "]", "(", ")"}
_NUMBER_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)")
_INTEGER_RE = re.compile(r"^[+-]?\d+$")
_DECIMAL_RE = re.compile(r"^[+-]?(\d+\.\d*|\.\d+)$")


def _is_pname_char(c: str) -> bool:
    return c.isalnum() or c in "_-."


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    i = 0
    n = len(text)
    line = 1
    col = 1

    def advance(k: int = 1) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if i < n and text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance()
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if c == "<":
            j = text.find(">", i + 1)
            if j < 0:
                raise TurtleError("unterminated IRI", start_line, start_col)
            raw = text[i + 1 : j]
            advance(j - i + 1)
            tokens.append(Token("iri", _unescape(raw, start_line, start_col), start_line, start_col))
            continue
        if c == '"':
            lex, consumed = _scan_string(text, i, start_line, start_col)
            advance(consumed)
            tokens.append(Token("string", lex, start_line, start_col))
            continue
        if c == "^" and text[i : i + 2] == "^^":
            advance(2)
            tokens.append(Token("punct", "^^", start_line, start_col))
            continue
        if c == "@":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "-"):
                j += 1
            word = text[i + 1 : j]
            advance(j - i)
            if word.lower() == "prefix":
                tokens.append(Token("keyword", "@prefix", start_line, start_col))
            else:
                tokens.append(Token("langtag", word, start_line, start_col))
            continue
        if c == "_" and text[i : i + 2] == "_:":
            j = i + 2
            while j < n and _is_pname_char(text[j]):
                j += 1
            label = text[i + 2 : j]
            if not label:
                raise TurtleError("empty blank node label", start_line, start_col)
            advance(j - i)
            tokens.append(Token("bnode_label", label, start_line, start_col))
            continue
        if c in _PUNCT:
            advance()
            tokens.append(Token("punct", c, start_line, start_col))
            continue
        m = _NUMBER_RE.match(text, i)
        if m and (c.isdigit() or (c in "+-." and m.end() > i + 1)):
            advance(m.end() - i)
            tokens.append(Token("number", m.group(0), start_line, start_col))
            continue
        if c.isalpha() or c == ":" or c == "_":
            j = i
            while j < n and (_is_pname_char(text[j]) or text[j] == ":"):
                j += 1
            # A trailing dot is the statement terminator, not part of the name.
            while j > i and text[j - 1] == ".":
                j -= 1
            word = text[i:j]
            advance(j - i)
            if ":" in word:
                tokens.append(Token("pname", word, start_line, start_col))
            elif word == "a":
                tokens.append(Token("keyword", "a", start_line, start_col))
            elif word.lower() == "prefix":
                tokens.append(Token("keyword", "@prefix", start_line, start_col))
            else:
                raise TurtleError(f"unexpected token {word!r}", start_line, start_col)
            continue
        raise TurtleError(f"unexpected character {c!r}", start_line, start_col)
    tokens.append(Token("eof", "", line, col))
    return tokens


def _scan_string(text: str, i: int, line: int, col: int) -> Tuple[str, int]:
    """Scan a quoted string starting at text[i] == '\"'. Returns (value, chars consumed)."""
    j = i + 1
    out: List[str] = []
    n = len(text)
    while j < n:
        c = text[j]
        if c == '"':
            return "".join(out), j - i + 1
        if c == "\n":
            raise TurtleError("newline in string literal", line, col)
        if c == "\\":
            if j + 1 >= n:
                break
            esc = text[j + 1]
            if esc == "u":
                out.append(chr(int(text[j + 2 : j + 6], 16)))
                j += 6
                continue
            if esc == "U":
                out.append(chr(int(text[j + 2 : j + 10], 16)))
                j += 10
                continue
            mapped = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "\\": "\\", "b": "\b", "f": "\f"}.get(esc)
            if mapped is None:
                raise TurtleError(f"unknown string escape \\{esc}", line, col)
            out.append(mapped)
            j += 2
            continue
        out.append(c)
        j += 1
    raise TurtleError("unterminated string literal", line, col)


def _unescape(raw: str, line: int, col: int) -> str:
    if "\\" not in raw:
        return raw
    out: List[str] = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\" and i + 1 < len(raw):
            esc = raw[i + 1]
            if esc == "u":
                out.append(chr(int(raw[i + 2 : i + 6], 16)))
                i += 6
                continue
            if esc == "U":
                out.append(chr(int(raw[i + 2 : i + 10], 16)))
                i += 10
                continue
        out.append(c)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, tokens: List[Token], used_bnode_labels: set):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: Dict[str, str] = {}
        self.triples: List[Triple] = []
        self._bnode_counter = 0
        self._used_labels = used_bnode_labels

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_punct(self, value: str) -> Token:
        tok = self.next()
        if tok.kind != "punct" or tok.value != value:
            raise TurtleError(f"expected {value!r}, got {tok.value!r}", tok.line, tok.col)
        return tok

    def fresh_bnode(self) -> BNode:
        # Labels are assigned in document order; explicit _:labels never collide
        # because they were collected before parsing started.
        while True:
            label = f"b{self._bnode_counter}"
            self._bnode_counter += 1
            if label not in self._used_labels:
                return BNode(label)

    def resolve_pname(self, tok: Token) -> Iri:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            raise TurtleError(f"undefined prefix {prefix!r}", tok.line, tok.col)
        return Iri(self.prefixes[prefix] + local)

    def parse_document(self) -> None:
        while self.peek().kind != "eof":
            if self.peek().kind == "keyword" and self.peek().value == "@prefix":
                self.parse_prefix()
            else:
                self.parse_statement()

    def parse_prefix(self) -> None:
        self.next()
        tok = self.next()
        if tok.kind != "pname" or not tok.value.endswith(":"):
            raise TurtleError("expected prefix name ending in ':'", tok.line, tok.col)
        name = tok.value[:-1]
        iri_tok = self.next()
        if iri_tok.kind != "iri":
            raise TurtleError("expected IRI in prefix declaration", iri_tok.line, iri_tok.col)
        self.prefixes[name] = iri_tok.value
        if self.peek().kind == "punct" and self.peek().value == ".":
            self.next()

    def parse_statement(self) -> None:
        subject = self.parse_subject()
        self.parse_predicate_object_list(subject)
        self.expect_punct(".")

    def parse_subject(self) -> RdfTerm:
        tok = self.peek()
        if tok.kind == "iri":
            self.next()
            return Iri(tok.value)
        if tok.kind == "pname":
            self.next()
            return self.resolve_pname(tok)
        if tok.kind == "bnode_label":
            self.next()
            return BNode(tok.value)
        if tok.kind == "punct" and tok.value == "[":
            return self.parse_bnode_property_list()
        if tok.kind == "punct" and tok.value == "(":
            return self.parse_collection()
        raise TurtleError(f"expected subject, got {tok.value!r}", tok.line, tok.col)

    def parse_predicate_object_list(self, subject: RdfTerm) -> None:
        while True:
            pred = self.parse_verb()
            while True:
                obj = self.parse_object()
                self.triples.append(Triple(subject, pred, obj))
                if self.peek().kind == "punct" and self.peek().value == ",":
                    self.next()
                    continue
                break
            if self.peek().kind == "punct" and self.peek().value == ";":
                self.next()
                # Tolerate trailing ';' before '.' or ']'.
                nxt = self.peek()
                if nxt.kind == "punct" and nxt.value in (".", "]", ";"):
                    while self.peek().kind == "punct" and self.peek().value == ";":
                        self.next()
                    return
                continue
            return

    def parse_verb(self) -> Iri:
        tok = self.next()
        if tok.kind == "keyword" and tok.value == "a":
            return Iri(RDF_TYPE)
        if tok.kind == "iri":
            return Iri(tok.value)
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        raise TurtleError(f"expected predicate, got {tok.value!r}", tok.line, tok.col)

    def parse_object(self) -> RdfTerm:
        tok = self.peek()
        if tok.kind == "iri":
            self.next()
            return Iri(tok.value)
        if tok.kind == "pname":
            self.next()
            return self.resolve_pname(tok)
        if tok.kind == "bnode_label":
            self.next()
            return BNode(tok.value)
        if tok.kind == "string":
            self.next()
            return self.parse_literal_tail(tok.value)
        if tok.kind == "number":
            self.next()
            if _INTEGER_RE.match(tok.value):
                return Literal(tok.value, XSD_INTEGER)
            if _DECIMAL_RE.match(tok.value):
                return Literal(tok.value, XSD_DECIMAL)
            raise TurtleError(f"unsupported numeric form {tok.value!r}", tok.line, tok.col)
        if tok.kind == "punct" and tok.value == "[":
            return self.parse_bnode_property_list()
        if tok.kind == "punct" and tok.value == "(":
            return self.parse_collection()
        raise TurtleError(f"expected object, got {tok.value!r}", tok.line, tok.col)

    def parse_literal_tail(self, lex: str) -> Literal:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "^^":
            self.next()
            dt_tok = self.next()
            if dt_tok.kind == "iri":
                return Literal(lex, dt_tok.value)
            if dt_tok.kind == "pname":
                return Literal(lex, self.resolve_pname(dt_tok).value)
            raise TurtleError("expected datatype IRI after ^^", dt_tok.line, dt_tok.col)
        if tok.kind == "langtag":
            self.next()
            return Literal(lex, lang=tok.value)
        return Literal(lex, XSD_STRING)

    def parse_bnode_property_list(self) -> BNode:
        self.expect_punct("[")
        node = self.fresh_bnode()
        if not (self.peek().kind == "punct" and self.peek().value == "]"):
            self.parse_predicate_object_list(node)
        self.expect_punct("]")
        return node

    def parse_collection(self) -> RdfTerm:
        self.expect_punct("(")
        items: List[RdfTerm] = []
        while not (self.peek().kind == "punct" and self.peek().value == ")"):
            items.append(self.parse_object())
        self.expect_punct(")")
        if not items:
            return Iri(RDF_NIL)
        head = self.fresh_bnode()
        node = head
        for k, item in enumerate(items):
            self.triples.append(Triple(node, Iri(RDF_FIRST), item))
            if k + 1 < len(items):
                nxt = self.fresh_bnode()
                self.triples.append(Triple(node, Iri(RDF_REST), nxt))
                node = nxt
            else:
                self.triples.append(Triple(node, Iri(RDF_REST), Iri(RDF_NIL)))
        return head


def parse_turtle(text: str) -> Graph:
    """Parse a Turtle document into a Graph.

    Anonymous blank nodes get labels `b0`, `b1`, ... in document order,
    skipping any label the document already uses explicitly, so parsing is
    deterministic and explicit labels round-trip unchanged.
    """
    tokens = tokenize(text)
    used = {t.value for t in tokens if t.kind == "bnode_label"}
    parser = _Parser(tokens, used)
    parser.parse_document()
    return Graph(parser.triples, parser.prefixes)


def _pname_for(iri: str, prefix_map: Dict[str, str]) -> Optional[str]:
    best: Optional[Tuple[str, str]] = None
    for prefix, ns in sorted(prefix_map.items()):
        if iri.startswith(ns) and (best is None or len(ns) > len(prefix_map[best[0]])):
            best = (prefix, iri[len(ns):])
    if best is None:
        return None
    prefix, local = best
    if local and not all(_is_pname_char(c) for c in local):
        return None
    if local.startswith(".") or local.endswith("."):
        return None
    return f"{prefix}:{local}"


def _render_term(term: RdfTerm, prefix_map: Dict[str, str]) -> str:
    if isinstance(term, Iri):
        pname = _pname_for(term.value, prefix_map)
        return pname if pname is not None else f"<{term.value}>"
    if isinstance(term, BNode):
        return f"_:{term.label}"
    lex = term.lexical_form
    if term.datatype == XSD_INTEGER and _INTEGER_RE.match(lex):
        return lex
    if term.datatype == XSD_DECIMAL and _DECIMAL_RE.match(lex):
        return lex
    escaped = lex.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
    if term.lang is not None:
        return f'"{escaped}"@{term.lang}'
    if term.datatype == XSD_STRING:
        return f'"{escaped}"'
    dt = _pname_for(term.datatype, prefix_map)
    dt_text = dt if dt is not None else f"<{term.datatype}>"
    return f'"{escaped}"^^{dt_text}'


def serialize_turtle(g: Graph) -> str:
    """Emit Turtle that parses back to a graph equal to `g` term for term.

    One group per subject; predicates sorted lexically, objects term-sorted.
    Blank nodes are written with explicit labels so identity survives the
    round trip.
    """
    lines: List[str] = []
    for prefix in sorted(g.prefix_map):
        lines.append(f"@prefix {prefix}: <{g.prefix_map[prefix]}> .")
    if g.prefix_map and len(g) > 0:
        lines.append("")
    for subject in g.subjects():
        by_pred: Dict[str, List[RdfTerm]] = {}
        for t in g.triples_out(subject):
            by_pred.setdefault(t.predicate.value, []).append(t.object)
        subj_text = _render_term(subject, g.prefix_map)
        pred_parts = []
        for pred in sorted(by_pred):
            objs = sorted(by_pred[pred], key=term_sort_key)
            obj_text = ", ".join(_render_term(o, g.prefix_map) for o in objs)
            pred_text = "a" if pred == RDF_TYPE else _render_term(Iri(pred), g.prefix_map)
            pred_parts.append(f"{pred_text} {obj_text}")
        joined = " ;\n    ".join(pred_parts)
        lines.append(f"{subj_text} {joined} .")
    return "\n".join(lines) + ("\n" if lines else "")
