"""Parser and serializer for the ShEx compact syntax dialect.

Grammar subset: `prefix` declarations; `label [& included]* [CLOSED]
[EXTRA p ...] { body }`; triple constraints `[!] [^] pred valueExpr card`;
value expressions `.` (wildcard), `IRI`/`Literal`/`BNode` node kinds,
datatype names, value sets in `[ ... ]` or `( ... )` (both spellings
accepted), `@label` shape references; `,` groups; `( ... | ... )` one-of
groups; `?`, `*`, `+`, `{m}`, `{m,n}`, `{m,}` cardinalities on constraints
and parenthesized groups; `a` for rdf:type. `%`-delimited semantic action
blocks are skipped with a warning.

Mixing `,` and `|` at the same level requires explicit parentheses around
the one-of group; the parser does not invent a precedence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .shapes import (
    Cardinality,
    EachOf,
    NodeConstraint,
    ONE,
    OneOf,
    OPT,
    PLUS,
    Schema,
    Shape,
    ShapeExpr,
    ShapeRef,
    STAR,
    TC,
    TripleExpr,
)
from .terms import Iri, Literal, RDF_TYPE, RdfTerm, XSD_DECIMAL, XSD_INTEGER, XSD_STRING, term_sort_key


class ShexError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


@dataclass
class ShexToken:
    kind: str
    value: str
    line: int
    col: int


@dataclass
class ShexDocument:
    """A parsed document: schema plus source spans and parse warnings."""

    source: str
    schema: Schema
    spans: Dict[str, Tuple[int, int]] = field(default_factory=dict)  # label -> (start line, end line)
    warnings: List[str] = field(default_factory=list)


_KEYWORDS = {"CLOSED", "EXTRA", "IRI", "LITERAL", "BNODE", "PREFIX"}
_PUNCT_SINGLE = set("{}()[],|?*+@!^&.;")
_INT_RE = re.compile(r"\d+")


def _is_name_char(c: str) -> bool:
    return c.isalnum() or c in "_-."


def _lex(text: str) -> Tuple[List[ShexToken], List[str]]:
    tokens: List[ShexToken] = []
    warnings: List[str] = []
    i = 0
    n = len(text)
    line, col = 1, 1

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
        if c == "%":
            # Semantic action block: skip to the closing '%' (out of scope,
            # but schemas containing them must still parse).
            j = text.find("%", i + 1)
            if j < 0:
                raise ShexError("unterminated semantic action block", start_line, start_col)
            warnings.append(f"semantic action skipped at line {start_line} (not supported)")
            advance(j - i + 1)
            continue
        if c == "<":
            j = text.find(">", i + 1)
            if j < 0:
                raise ShexError("unterminated IRI", start_line, start_col)
            value = text[i + 1 : j]
            advance(j - i + 1)
            tokens.append(ShexToken("iri", value, start_line, start_col))
            continue
        if c == '"':
            j = i + 1
            out: List[str] = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append({"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}.get(text[j + 1], text[j + 1]))
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise ShexError("unterminated string", start_line, start_col)
            advance(j - i + 1)
            tokens.append(ShexToken("string", "".join(out), start_line, start_col))
            continue
        if c.isdigit():
            m = _INT_RE.match(text, i)
            advance(m.end() - i)
            tokens.append(ShexToken("int", m.group(0), start_line, start_col))
            continue
        if c in _PUNCT_SINGLE:
            advance()
            tokens.append(ShexToken("punct", c, start_line, start_col))
            continue
        if c.isalpha() or c == "_" or c == ":":
            j = i
            while j < n and (_is_name_char(text[j]) or text[j] == ":"):
                j += 1
            while j > i and text[j - 1] == ".":
                j -= 1
            word = text[i:j]
            advance(j - i)
            if ":" in word:
                tokens.append(ShexToken("pname", word, start_line, start_col))
            elif word == "a":
                tokens.append(ShexToken("a", word, start_line, start_col))
            elif word.upper() in _KEYWORDS:
                tokens.append(ShexToken("keyword", word.upper(), start_line, start_col))
            else:
                raise ShexError(f"unexpected token {word!r}", start_line, start_col)
            continue
        raise ShexError(f"unexpected character {c!r}", start_line, start_col)
    tokens.append(ShexToken("eof", "", line, col))
    return tokens, warnings


class _ShexParser:
    def __init__(self, tokens: List[ShexToken]):
        self.tokens = tokens
        self.pos = 0
        self.prefixes: Dict[str, str] = {}

    def peek(self, offset: int = 0) -> ShexToken:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self) -> ShexToken:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def at_punct(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.value == value

    def expect_punct(self, value: str) -> None:
        tok = self.next()
        if tok.kind != "punct" or tok.value != value:
            raise ShexError(f"expected {value!r}, got {tok.value!r}", tok.line, tok.col)

    def resolve_pname(self, tok: ShexToken) -> str:
        prefix, _, local = tok.value.partition(":")
        if prefix not in self.prefixes:
            raise ShexError(f"undefined prefix {prefix!r}", tok.line, tok.col)
        return self.prefixes[prefix] + local

    def parse_schema(self) -> Tuple[Schema, Dict[str, Tuple[int, int]]]:
        shapes: Dict[str, ShapeExpr] = {}
        spans: Dict[str, Tuple[int, int]] = {}
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "keyword" and tok.value == "PREFIX":
                self.parse_prefix()
                continue
            label, shape, span = self.parse_shape_decl()
            if label in shapes:
                raise ShexError(f"duplicate shape label {label}", tok.line, tok.col)
            shapes[label] = shape
            spans[label] = span
        return Schema(shapes=shapes, prefix_map=dict(self.prefixes)), spans

    def parse_prefix(self) -> None:
        self.next()
        tok = self.next()
        if tok.kind != "pname" or not tok.value.endswith(":"):
            raise ShexError("expected prefix name ending in ':'", tok.line, tok.col)
        name = tok.value[:-1]
        iri_tok = self.next()
        if iri_tok.kind != "iri":
            raise ShexError("expected IRI in prefix declaration", iri_tok.line, iri_tok.col)
        self.prefixes[name] = iri_tok.value

    def parse_label(self) -> str:
        tok = self.next()
        if tok.kind == "iri":
            return tok.value
        if tok.kind == "pname":
            return self.resolve_pname(tok)
        raise ShexError(f"expected shape label, got {tok.value!r}", tok.line, tok.col)

    def parse_shape_decl(self) -> Tuple[str, Shape, Tuple[int, int]]:
        start_line = self.peek().line
        label = self.parse_label()
        includes: List[str] = []
        closed = False
        extra: List[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.value == "&":
                self.next()
                includes.append(self.parse_label())
                continue
            if tok.kind == "keyword" and tok.value == "CLOSED":
                self.next()
                closed = True
                continue
            if tok.kind == "keyword" and tok.value == "EXTRA":
                self.next()
                extra.extend(self.parse_predicate_list())
                continue
            break
        self.expect_punct("{")
        expr: Optional[TripleExpr] = None
        if not self.at_punct("}"):
            expr = self.parse_sequence()
        end_tok = self.next()
        if end_tok.kind != "punct" or end_tok.value != "}":
            raise ShexError(f"expected '}}', got {end_tok.value!r}", end_tok.line, end_tok.col)
        shape = Shape(closed=closed, extra=frozenset(extra), expr=expr, includes=tuple(includes))
        return label, shape, (start_line, end_tok.line)

    def parse_predicate_list(self) -> List[str]:
        preds: List[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "a":
                self.next()
                preds.append(RDF_TYPE)
            elif tok.kind == "pname":
                self.next()
                preds.append(self.resolve_pname(tok))
            elif tok.kind == "iri":
                self.next()
                preds.append(tok.value)
            else:
                break
        if not preds:
            tok = self.peek()
            raise ShexError("EXTRA needs at least one predicate", tok.line, tok.col)
        return preds

    def parse_sequence(self) -> TripleExpr:
        elems = [self.parse_unary()]
        while self.at_punct(","):
            self.next()
            # Tolerate a trailing comma before '}' or ')'.
            if self.at_punct("}") or self.at_punct(")"):
                break
            elems.append(self.parse_unary())
        if len(elems) == 1:
            return elems[0]
        return EachOf(tuple(elems), ONE)

    def parse_unary(self) -> TripleExpr:
        if self.at_punct("("):
            self.next()
            first = self.parse_sequence()
            if self.at_punct("|"):
                branches = [first]
                while self.at_punct("|"):
                    self.next()
                    branches.append(self.parse_sequence())
                self.expect_punct(")")
                card = self.parse_cardinality()
                return OneOf(tuple(branches), card)
            self.expect_punct(")")
            card = self.parse_cardinality()
            if isinstance(first, EachOf) and first.card == ONE:
                return EachOf(first.exprs, card)
            return EachOf((first,), card)
        return self.parse_triple_constraint()

    def parse_triple_constraint(self) -> TC:
        negated = False
        inverse = False
        if self.at_punct("!"):
            self.next()
            negated = True
        if self.at_punct("^"):
            self.next()
            inverse = True
        tok = self.next()
        if tok.kind == "a":
            predicate = RDF_TYPE
        elif tok.kind == "pname":
            predicate = self.resolve_pname(tok)
        elif tok.kind == "iri":
            predicate = tok.value
        else:
            raise ShexError(f"expected predicate, got {tok.value!r}", tok.line, tok.col)
        value = self.parse_value_expr()
        card = self.parse_cardinality()
        return TC(predicate=predicate, value=value, card=card, inverse=inverse, negated=negated)

    def parse_value_expr(self) -> ShapeExpr:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == ".":
            self.next()
            return NodeConstraint(wildcard=True)
        if tok.kind == "punct" and tok.value == "@":
            self.next()
            return ShapeRef(self.parse_label())
        if tok.kind == "keyword" and tok.value in ("IRI", "LITERAL", "BNODE"):
            self.next()
            kind = {"IRI": "IRI", "LITERAL": "Literal", "BNODE": "BNode"}[tok.value]
            return NodeConstraint(node_kind=kind)
        if tok.kind == "punct" and tok.value in ("[", "("):
            return self.parse_value_set()
        if tok.kind == "pname":
            self.next()
            return NodeConstraint(datatype=self.resolve_pname(tok))
        if tok.kind == "iri":
            self.next()
            return NodeConstraint(datatype=tok.value)
        raise ShexError(f"expected value expression, got {tok.value!r}", tok.line, tok.col)

    def parse_value_set(self) -> NodeConstraint:
        open_tok = self.next()
        close = "]" if open_tok.value == "[" else ")"
        values: List[RdfTerm] = []
        while not self.at_punct(close):
            tok = self.next()
            if tok.kind == "pname":
                values.append(Iri(self.resolve_pname(tok)))
            elif tok.kind == "iri":
                values.append(Iri(tok.value))
            elif tok.kind == "a":
                values.append(Iri(RDF_TYPE))
            elif tok.kind == "string":
                values.append(Literal(tok.value, XSD_STRING))
            elif tok.kind == "int":
                values.append(Literal(tok.value, XSD_INTEGER))
            elif tok.kind == "eof":
                raise ShexError("unterminated value set", tok.line, tok.col)
            else:
                raise ShexError(f"unexpected value set member {tok.value!r}", tok.line, tok.col)
        self.next()
        return NodeConstraint(value_set=frozenset(values))

    def parse_cardinality(self) -> Cardinality:
        tok = self.peek()
        if tok.kind == "punct" and tok.value == "?":
            self.next()
            return OPT
        if tok.kind == "punct" and tok.value == "*":
            self.next()
            return STAR
        if tok.kind == "punct" and tok.value == "+":
            self.next()
            return PLUS
        if tok.kind == "punct" and tok.value == "{" and self.peek(1).kind == "int":
            self.next()
            lo_tok = self.next()
            lo = int(lo_tok.value)
            hi: Optional[int] = lo
            if self.at_punct(","):
                self.next()
                nxt = self.peek()
                if nxt.kind == "int":
                    self.next()
                    hi = int(nxt.value)
                else:
                    hi = None
            self.expect_punct("}")
            return Cardinality(lo, hi)
        return ONE


def parse_shex_document(text: str) -> ShexDocument:
    tokens, warnings = _lex(text)
    parser = _ShexParser(tokens)
    schema, spans = parser.parse_schema()
    return ShexDocument(source=text, schema=schema, spans=spans, warnings=warnings)


def parse_shexc(text: str) -> Schema:
    """Parse ShEx compact syntax into a Schema (structure mirrors the text)."""
    return parse_shex_document(text).schema


# ---------------------------------------------------------------------------
# Serialization


def _pname_or_iri(iri: str, prefix_map: Dict[str, str]) -> str:
    best = None
    for prefix, ns in sorted(prefix_map.items()):
        if iri.startswith(ns) and (best is None or len(ns) > len(prefix_map[best[0]])):
            best = (prefix, iri[len(ns):])
    if best is not None:
        prefix, local = best
        if all(_is_name_char(c) for c in local) and not local.endswith("."):
            return f"{prefix}:{local}"
    return f"<{iri}>"


def _render_value_term(term: RdfTerm, prefix_map: Dict[str, str]) -> str:
    if isinstance(term, Iri):
        return _pname_or_iri(term.value, prefix_map)
    if isinstance(term, Literal):
        if term.datatype == XSD_INTEGER:
            return term.lexical_form
        escaped = term.lexical_form.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    raise ValueError(f"cannot serialize value set member {term!r}")


def _render_value_expr(se: ShapeExpr, prefix_map: Dict[str, str]) -> str:
    if isinstance(se, NodeConstraint):
        if se.wildcard:
            return "."
        if se.node_kind is not None:
            return {"IRI": "IRI", "Literal": "LITERAL", "BNode": "BNODE"}[se.node_kind]
        if se.value_set is not None:
            members = " ".join(_render_value_term(v, prefix_map) for v in sorted(se.value_set, key=term_sort_key))
            return f"[{members}]" if members else "[]"
        return _pname_or_iri(se.datatype, prefix_map)
    if isinstance(se, ShapeRef):
        return "@" + _pname_or_iri(se.label, prefix_map)
    raise ValueError(f"cannot serialize inline value expression {se!r}")


def _render_triple_expr(expr: TripleExpr, prefix_map: Dict[str, str], top: bool = False) -> str:
    if isinstance(expr, TC):
        pred = "a" if expr.predicate == RDF_TYPE else _pname_or_iri(expr.predicate, prefix_map)
        parts = []
        if expr.negated:
            parts.append("!")
        if expr.inverse:
            parts.append("^")
        parts.append(pred)
        parts.append(_render_value_expr(expr.value, prefix_map))
        text = " ".join(parts)
        card = expr.card.text()
        return f"{text} {card}" if card else text
    if isinstance(expr, EachOf):
        inner = ", ".join(_render_triple_expr(e, prefix_map) for e in expr.exprs)
        if top and expr.card == ONE:
            return inner
        card = expr.card.text()
        return f"({inner}){' ' + card if card else ''}"
    inner = " | ".join(_render_triple_expr(e, prefix_map) for e in expr.exprs)
    card = expr.card.text()
    return f"({inner}){' ' + card if card else ''}"


def serialize_shexc(schema: Schema) -> str:
    """Emit ShEx compact syntax; value sets are written in bracket form."""
    lines: List[str] = []
    for prefix in sorted(schema.prefix_map):
        lines.append(f"prefix {prefix}: <{schema.prefix_map[prefix]}>")
    if schema.prefix_map and schema.shapes:
        lines.append("")
    for label, se in schema.shapes.items():
        if not isinstance(se, Shape):
            raise ValueError(f"cannot serialize non-Shape top-level expression for {label}")
        head = _pname_or_iri(label, schema.prefix_map)
        for inc in se.includes:
            head += " & " + _pname_or_iri(inc, schema.prefix_map)
        if se.closed:
            head += " CLOSED"
        if se.extra:
            extras = " ".join(
                "a" if p == RDF_TYPE else _pname_or_iri(p, schema.prefix_map) for p in sorted(se.extra)
            )
            head += f" EXTRA {extras}"
        if se.expr is None:
            lines.append(head + " { }")
        else:
            body = _render_triple_expr(se.expr, schema.prefix_map, top=True)
            lines.append(head + " {")
            for part in _split_top_level(body):
                lines.append(f"  {part}")
            lines.append("}")
    return "\n".join(lines) + "\n"


def _split_top_level(body: str) -> List[str]:
    """Split a rendered sequence on top-level commas for line formatting."""
    parts: List[str] = []
    depth = 0
    current: List[str] = []
    for c in body:
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        if c == "," and depth == 0:
            parts.append("".join(current).strip() + ",")
            current = []
        else:
            current.append(c)
    parts.append("".join(current).strip())
    return parts
