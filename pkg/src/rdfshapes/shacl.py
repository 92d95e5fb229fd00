"""SHACL-core shapes graph loader.

Loads a shapes graph (itself ordinary Turtle, already parsed into a Graph)
into an executable constraint tree plus a scope map. Named shapes are the
subjects typed sh:Shape; blank nodes reached through sh:shape / sh:shapes /
sh:valueShape / sh:filterShape / sh:qualifiedValueShape become anonymous
shapes registered under their blank node label. Any term in the sh:
namespace that the loader does not understand produces a warning naming the
term and the shape; nothing is dropped silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple, Union

from .graph import Graph
from .terms import BNode, Iri, RDF_TYPE, RdfTerm, SH_NS, term_sort_key

SH = SH_NS
SH_SHAPE_CLASS = SH + "Shape"
SH_IRI = SH + "IRI"

# Vocabulary the loader understands. Anything else under sh: warns.
SUPPORTED_TERMS = {
    SH + name
    for name in (
        "Shape",
        "property",
        "constraint",
        "predicate",
        "datatype",
        "hasValue",
        "in",
        "nodeKind",
        "IRI",
        "valueShape",
        "filterShape",
        "minCount",
        "maxCount",
        "qualifiedValueShape",
        "qualifiedMinCount",
        "qualifiedMaxCount",
        "shape",
        "shapes",
        "OrConstraint",
        "AndConstraint",
        "NotConstraint",
        "ClosedShapeConstraint",
        "ignoredProperties",
        "scopeNode",
        "scopeClass",
    )
}


class ShaclLoadError(ValueError):
    pass


@dataclass(frozen=True)
class LoadWarning:
    shape: str
    term: str
    message: str

    def __str__(self) -> str:
        return f"{self.shape}: {self.message} ({self.term})"


@dataclass
class PropertyConstraint:
    predicate: str
    datatype: Optional[str] = None
    has_value: Optional[RdfTerm] = None
    in_set: Optional[List[RdfTerm]] = None
    node_kind: Optional[str] = None  # only 'IRI' is supported core
    value_shape: Optional[str] = None  # shape label
    min_count: int = 0
    max_count: Optional[int] = None
    qualified_value_shape: Optional[str] = None  # shape label
    qualified_min_count: int = 0
    qualified_max_count: Optional[int] = None
    filter_shape: Optional[str] = None  # shape label


@dataclass
class OrConstraint:
    shapes: List[str]


@dataclass
class AndConstraint:
    shapes: List[str]


@dataclass
class NotConstraint:
    shape: str


@dataclass
class ClosedConstraint:
    ignored_properties: Set[str] = field(default_factory=set)


@dataclass
class InConstraint:
    """Node-level sh:in: the focus node itself must be one of the values."""

    values: List[RdfTerm] = field(default_factory=list)


NodeConstraintKind = Union[OrConstraint, AndConstraint, NotConstraint, ClosedConstraint, InConstraint]


@dataclass
class ShaclShape:
    label: str
    property_constraints: List[PropertyConstraint] = field(default_factory=list)
    node_constraints: List[NodeConstraintKind] = field(default_factory=list)
    filter: Optional[str] = None  # shape label


@dataclass
class ScopeMap:
    node_scopes: List[Tuple[str, RdfTerm]] = field(default_factory=list)  # (shape label, node)
    class_scopes: List[Tuple[str, str]] = field(default_factory=list)  # (shape label, class IRI)


@dataclass
class ShaclSchema:
    shapes: Dict[str, ShaclShape] = field(default_factory=dict)
    scopes: ScopeMap = field(default_factory=ScopeMap)
    prefix_map: Dict[str, str] = field(default_factory=dict)

    def named_labels(self) -> List[str]:
        return [label for label in self.shapes if not label.startswith("_:")]


def _label_of(term: RdfTerm) -> str:
    if isinstance(term, Iri):
        return term.value
    if isinstance(term, BNode):
        return "_:" + term.label
    raise ShaclLoadError(f"literal cannot name a shape: {term!r}")


class _Loader:
    def __init__(self, g: Graph):
        self.g = g
        self.warnings: List[LoadWarning] = []
        self.shapes: Dict[str, ShaclShape] = {}
        self.scopes = ScopeMap()

    def warn(self, shape: str, term: str, message: str) -> None:
        self.warnings.append(LoadWarning(shape, term, message))

    def values(self, node: RdfTerm, term: str) -> List[RdfTerm]:
        return self.g.values_for(node, Iri(SH + term))

    def one_value(self, node: RdfTerm, term: str) -> Optional[RdfTerm]:
        vals = self.values(node, term)
        return vals[0] if vals else None

    def int_value(self, node: RdfTerm, term: str, shape: str) -> Optional[int]:
        val = self.one_value(node, term)
        if val is None:
            return None
        try:
            return int(val.lexical_form)  # type: ignore[union-attr]
        except (AttributeError, ValueError):
            raise ShaclLoadError(f"{shape}: sh:{term} needs an integer, got {val!r}")

    def load(self) -> ShaclSchema:
        named = [t.subject for t in self.g.triples if t.predicate.value == RDF_TYPE and t.object == Iri(SH_SHAPE_CLASS)]
        for subject in sorted(set(named), key=term_sort_key):
            self.load_shape(subject)
        for label in sorted(self.shapes):
            node = self._node_for(label)
            for target in self.values(node, "scopeNode"):
                self.scopes.node_scopes.append((label, target))
            for target in self.values(node, "scopeClass"):
                if isinstance(target, Iri):
                    self.scopes.class_scopes.append((label, target.value))
                else:
                    self.warn(label, SH + "scopeClass", "scope class must be an IRI")
        return ShaclSchema(shapes=self.shapes, scopes=self.scopes, prefix_map=dict(self.g.prefix_map))

    def _node_for(self, label: str) -> RdfTerm:
        return BNode(label[2:]) if label.startswith("_:") else Iri(label)

    def load_shape(self, node: RdfTerm) -> str:
        label = _label_of(node)
        if label in self.shapes:
            return label
        shape = ShaclShape(label=label)
        self.shapes[label] = shape
        for t in self.g.triples_out(node):
            pred = t.predicate.value
            if not pred.startswith(SH):
                if pred == RDF_TYPE:
                    continue
                self.warn(label, pred, "non-SHACL predicate on shape ignored")
                continue
            if pred == SH + "property":
                shape.property_constraints.append(self.load_property_constraint(t.object, label))
            elif pred == SH + "constraint":
                nc = self.load_node_constraint(t.object, label)
                if nc is not None:
                    shape.node_constraints.append(nc)
            elif pred == SH + "filterShape":
                shape.filter = self.load_shape(t.object)
            elif pred in (SH + "scopeNode", SH + "scopeClass"):
                continue  # collected per shape afterwards
            elif pred == SH + "in":
                shape.node_constraints.append(InConstraint(values=self.load_list(t.object, label)))
            else:
                self.warn(label, pred, "unsupported SHACL term on shape")
        # Deterministic constraint order regardless of set-of-triples iteration.
        shape.property_constraints.sort(key=_property_sort_key)
        shape.node_constraints.sort(key=lambda nc: type(nc).__name__)
        return label

    def load_list(self, head: RdfTerm, shape: str) -> List[RdfTerm]:
        try:
            return self.g.expand_list(head)
        except ValueError as exc:
            raise ShaclLoadError(f"{shape}: {exc}")

    def load_property_constraint(self, node: RdfTerm, shape: str) -> PropertyConstraint:
        pred_term = self.one_value(node, "predicate")
        if not isinstance(pred_term, Iri):
            raise ShaclLoadError(f"{shape}: property constraint without sh:predicate")
        pc = PropertyConstraint(predicate=pred_term.value)
        for t in self.g.triples_out(node):
            p = t.predicate.value
            if p == SH + "predicate":
                continue
            elif p == SH + "datatype":
                if isinstance(t.object, Iri):
                    pc.datatype = t.object.value
                else:
                    self.warn(shape, p, f"datatype must be an IRI, got {t.object!r}")
            elif p == SH + "hasValue":
                pc.has_value = t.object
            elif p == SH + "in":
                pc.in_set = self.load_list(t.object, shape)
            elif p == SH + "nodeKind":
                if t.object == Iri(SH_IRI):
                    pc.node_kind = "IRI"
                else:
                    self.warn(shape, p, f"unsupported node kind {t.object!r}")
            elif p == SH + "valueShape":
                pc.value_shape = self.load_shape(t.object)
            elif p == SH + "filterShape":
                pc.filter_shape = self.load_shape(t.object)
            elif p == SH + "minCount":
                pc.min_count = self.int_value(node, "minCount", shape) or 0
            elif p == SH + "maxCount":
                pc.max_count = self.int_value(node, "maxCount", shape)
            elif p == SH + "qualifiedValueShape":
                pc.qualified_value_shape = self.load_shape(t.object)
            elif p == SH + "qualifiedMinCount":
                pc.qualified_min_count = self.int_value(node, "qualifiedMinCount", shape) or 0
            elif p == SH + "qualifiedMaxCount":
                pc.qualified_max_count = self.int_value(node, "qualifiedMaxCount", shape)
            elif p.startswith(SH):
                self.warn(shape, p, "unsupported SHACL term on property constraint")
            else:
                self.warn(shape, p, "non-SHACL predicate on property constraint ignored")
        return pc

    def load_node_constraint(self, node: RdfTerm, shape: str) -> Optional[NodeConstraintKind]:
        kinds = [v.value for v in self.g.values_for(node, Iri(RDF_TYPE)) if isinstance(v, Iri)]
        if SH + "OrConstraint" in kinds:
            members = self.one_value(node, "shapes")
            if members is None:
                raise ShaclLoadError(f"{shape}: sh:OrConstraint without sh:shapes")
            return OrConstraint([self.load_shape(m) for m in self.load_list(members, shape)])
        if SH + "AndConstraint" in kinds:
            members = self.one_value(node, "shapes")
            if members is None:
                raise ShaclLoadError(f"{shape}: sh:AndConstraint without sh:shapes")
            return AndConstraint([self.load_shape(m) for m in self.load_list(members, shape)])
        if SH + "NotConstraint" in kinds:
            inner = self.one_value(node, "shape")
            if inner is None:
                raise ShaclLoadError(f"{shape}: sh:NotConstraint without sh:shape")
            return NotConstraint(self.load_shape(inner))
        if SH + "ClosedShapeConstraint" in kinds:
            ignored = self.one_value(node, "ignoredProperties")
            values: List[RdfTerm] = self.load_list(ignored, shape) if ignored is not None else []
            return ClosedConstraint({v.value for v in values if isinstance(v, Iri)})
        in_head = self.one_value(node, "in")
        if in_head is not None:
            return InConstraint(values=self.load_list(in_head, shape))
        for t in self.g.triples_out(node):
            self.warn(shape, t.predicate.value, "unsupported constraint term")
        return None


def _property_sort_key(pc: PropertyConstraint) -> tuple:
    return (
        pc.predicate,
        pc.datatype or "",
        str(pc.has_value or ""),
        pc.node_kind or "",
        pc.value_shape or "",
        pc.qualified_value_shape or "",
        pc.min_count,
        -1 if pc.max_count is None else pc.max_count,
    )


def load_shacl(g: Graph) -> Tuple[ShaclSchema, List[LoadWarning]]:
    """Load a shapes graph into a ShaclSchema plus an exhaustive warning list."""
    loader = _Loader(g)
    schema = loader.load()
    return schema, loader.warnings


def scope_targets(schema: ShaclSchema, data: Graph) -> List[Tuple[RdfTerm, str]]:
    """Resolve the scope map against a data graph.

    Node scopes pair directly; each class scope pairs every subject with a
    direct rdf:type of that class (no subclass inference). The result is
    deduplicated and deterministically ordered.
    """
    pairs: Set[Tuple[RdfTerm, str]] = set()
    for label, node in schema.scopes.node_scopes:
        pairs.add((node, label))
    if schema.scopes.class_scopes:
        instances: Dict[str, Set[RdfTerm]] = {}
        for t in data.triples:
            if t.predicate.value == RDF_TYPE and isinstance(t.object, Iri):
                instances.setdefault(t.object.value, set()).add(t.subject)
        for label, cls in schema.scopes.class_scopes:
            for node in instances.get(cls, ()):
                pairs.add((node, label))
    return sorted(pairs, key=lambda p: (term_sort_key(p[0]), p[1]))
