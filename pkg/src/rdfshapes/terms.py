"""RDF terms and triples.

Terms are immutable value objects: two terms are equal iff they are
structurally equal (IRI string, or lexical form + datatype + language tag).
No value-space canonicalization happens here: "1.0" and "1.00" are distinct
literals even under the same numeric datatype.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS_NS = "http://www.w3.org/2000/01/rdf-schema#"
XSD_NS = "http://www.w3.org/2001/XMLSchema#"
SH_NS = "http://www.w3.org/ns/shacl#"

RDF_TYPE = RDF_NS + "type"
RDF_FIRST = RDF_NS + "first"
RDF_REST = RDF_NS + "rest"
RDF_NIL = RDF_NS + "nil"
RDF_LANGSTRING = RDF_NS + "langString"

XSD_STRING = XSD_NS + "string"
XSD_INTEGER = XSD_NS + "integer"
XSD_DECIMAL = XSD_NS + "decimal"
XSD_FLOAT = XSD_NS + "float"
XSD_DATETIME = XSD_NS + "dateTime"
XSD_GYEAR = XSD_NS + "gYear"


@dataclass(frozen=True)
class Iri:
    value: str

    def __repr__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True)
class BNode:
    label: str

    def __repr__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True)
class Literal:
    lexical_form: str
    datatype: str = XSD_STRING
    lang: Optional[str] = None

    def __post_init__(self) -> None:
        # A language-tagged literal always has datatype rdf:langString.
        if self.lang is not None and self.datatype != RDF_LANGSTRING:
            object.__setattr__(self, "datatype", RDF_LANGSTRING)

    def __repr__(self) -> str:
        if self.lang is not None:
            return f'"{self.lexical_form}"@{self.lang}'
        if self.datatype == XSD_STRING:
            return f'"{self.lexical_form}"'
        return f'"{self.lexical_form}"^^<{self.datatype}>'


RdfTerm = Union[Iri, BNode, Literal]


@dataclass(frozen=True)
class Triple:
    subject: Union[Iri, BNode]
    predicate: Iri
    object: RdfTerm

    def __repr__(self) -> str:
        return f"({self.subject!r} {self.predicate!r} {self.object!r})"


def term_sort_key(term: RdfTerm) -> tuple:
    """Total order over terms: IRIs, then blank nodes, then literals."""
    if isinstance(term, Iri):
        return (0, term.value, "", "")
    if isinstance(term, BNode):
        return (1, term.label, "", "")
    return (2, term.lexical_form, term.datatype, term.lang or "")


def triple_sort_key(t: Triple) -> tuple:
    return (term_sort_key(t.subject), t.predicate.value, term_sort_key(t.object))
