"""Shape algebra: the internal form of a ShEx schema.

A Schema maps shape labels (IRI strings) to shape expressions. Triple
expressions are regular bag expressions over triple constraints; matching
semantics live in the validator, this module owns structure,
well-formedness analysis, and inclusion resolution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

from .terms import RdfTerm

UNBOUNDED = None  # Cardinality.max sentinel


@dataclass(frozen=True)
class Cardinality:
    """min/max occurrence bounds; max None = unbounded.

    Invalid bounds (negative, or min > max) are representable so that
    well_formed can report them as diagnostics instead of the constructor
    blowing up mid-parse.
    """

    min: int
    max: Optional[int]  # None = unbounded

    def is_valid(self) -> bool:
        return self.min >= 0 and (self.max is None or self.max >= self.min)

    def text(self) -> str:
        if (self.min, self.max) == (1, 1):
            return ""
        if (self.min, self.max) == (0, 1):
            return "?"
        if (self.min, self.max) == (0, None):
            return "*"
        if (self.min, self.max) == (1, None):
            return "+"
        if self.max is None:
            return f"{{{self.min},}}"
        return f"{{{self.min},{self.max}}}"


ONE = Cardinality(1, 1)
OPT = Cardinality(0, 1)
STAR = Cardinality(0, None)
PLUS = Cardinality(1, None)


@dataclass(frozen=True)
class NodeConstraint:
    """Constraint on a single term: all present facets must hold."""

    node_kind: Optional[str] = None  # 'IRI' | 'Literal' | 'BNode'
    datatype: Optional[str] = None
    value_set: Optional[FrozenSet[RdfTerm]] = None
    wildcard: bool = False

    def __post_init__(self) -> None:
        if not (self.wildcard or self.node_kind or self.datatype or self.value_set is not None):
            raise ValueError("node constraint needs a facet or the wildcard")


@dataclass(frozen=True)
class ShapeRef:
    label: str


@dataclass(frozen=True)
class TC:
    """Triple constraint: predicate + value expression + cardinality.

    A negated TC forbids neighbourhood triples matching (predicate, value)
    entirely; its written cardinality is irrelevant.
    """

    predicate: str
    value: "ShapeExpr"
    card: Cardinality = ONE
    inverse: bool = False
    negated: bool = False


@dataclass(frozen=True)
class EachOf:
    exprs: Tuple["TripleExpr", ...]
    card: Cardinality = ONE

    def __post_init__(self) -> None:
        if not self.exprs:
            raise ValueError("EachOf needs at least one member")


@dataclass(frozen=True)
class OneOf:
    exprs: Tuple["TripleExpr", ...]
    card: Cardinality = ONE

    def __post_init__(self) -> None:
        if not self.exprs:
            raise ValueError("OneOf needs at least one member")


TripleExpr = Union[TC, EachOf, OneOf]


@dataclass(frozen=True)
class Shape:
    closed: bool = False
    extra: FrozenSet[str] = frozenset()
    expr: Optional[TripleExpr] = None
    includes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class ShapeAnd:
    exprs: Tuple["ShapeExpr", ...]


@dataclass(frozen=True)
class ShapeOr:
    exprs: Tuple["ShapeExpr", ...]


@dataclass(frozen=True)
class ShapeNot:
    inner: "ShapeExpr"


ShapeExpr = Union[NodeConstraint, ShapeRef, Shape, ShapeAnd, ShapeOr, ShapeNot]


@dataclass
class Schema:
    shapes: Dict[str, ShapeExpr] = field(default_factory=dict)
    prefix_map: Dict[str, str] = field(default_factory=dict)

    def __eq__(self, other) -> bool:
        return isinstance(other, Schema) and self.shapes == other.shapes


@dataclass(frozen=True)
class Diagnostic:
    shape: str
    message: str

    def __str__(self) -> str:
        return f"{self.shape}: {self.message}"


def _walk_triple_exprs(expr: TripleExpr):
    yield expr
    if isinstance(expr, (EachOf, OneOf)):
        for child in expr.exprs:
            yield from _walk_triple_exprs(child)


def _all_triple_exprs(se: ShapeExpr) -> List[TripleExpr]:
    """All triple expressions inside a shape expression, through TC values."""
    out: List[TripleExpr] = []

    def visit_shape(s: ShapeExpr) -> None:
        if isinstance(s, Shape) and s.expr is not None:
            for node in _walk_triple_exprs(s.expr):
                out.append(node)
                if isinstance(node, TC):
                    visit_shape(node.value)
        elif isinstance(s, (ShapeAnd, ShapeOr)):
            for child in s.exprs:
                visit_shape(child)
        elif isinstance(s, ShapeNot):
            visit_shape(s.inner)

    visit_shape(se)
    return out


def _shape_refs(se: ShapeExpr) -> List[str]:
    """Labels referenced anywhere inside a shape expression."""
    refs: List[str] = []

    def visit_shape(s: ShapeExpr) -> None:
        if isinstance(s, ShapeRef):
            refs.append(s.label)
        elif isinstance(s, Shape):
            refs.extend(s.includes)
            if s.expr is not None:
                for node in _walk_triple_exprs(s.expr):
                    if isinstance(node, TC):
                        visit_shape(node.value)
        elif isinstance(s, (ShapeAnd, ShapeOr)):
            for child in s.exprs:
                visit_shape(child)
        elif isinstance(s, ShapeNot):
            visit_shape(s.inner)

    visit_shape(se)
    return refs


def _negation_edges(se: ShapeExpr) -> List[Tuple[str, bool]]:
    """(referenced label, crosses-a-negation) edges out of a shape expression."""
    edges: List[Tuple[str, bool]] = []

    def visit(s: ShapeExpr, neg: bool) -> None:
        if isinstance(s, ShapeRef):
            edges.append((s.label, neg))
        elif isinstance(s, Shape):
            for inc in s.includes:
                edges.append((inc, neg))
            if s.expr is not None:
                for node in _walk_triple_exprs(s.expr):
                    if isinstance(node, TC):
                        visit(node.value, neg or node.negated)
        elif isinstance(s, (ShapeAnd, ShapeOr)):
            for child in s.exprs:
                visit(child, neg)
        elif isinstance(s, ShapeNot):
            visit(s.inner, True)

    visit(se, False)
    return edges


def well_formed(schema: Schema) -> List[Diagnostic]:
    """Check reference resolution, cardinalities, and negation stratification.

    An empty result means the schema is safe to validate with: every
    reference and include resolves, every cardinality has min <= max, and no
    reference cycle passes through a negation (ShapeNot or a negated TC),
    which would make recursive semantics ill-founded.
    """
    diags: List[Diagnostic] = []
    for label, se in schema.shapes.items():
        for ref in _shape_refs(se):
            if ref not in schema.shapes:
                diags.append(Diagnostic(label, f"undefined shape reference {ref}"))
        for node in _all_triple_exprs(se):
            if not node.card.is_valid():
                card = node.card
                diags.append(Diagnostic(label, f"invalid cardinality {{{card.min},{card.max}}}"))

    # Cycle detection over the reference graph, rejecting cycles that cross a
    # negation boundary (stratification guard).
    edges: Dict[str, List[Tuple[str, bool]]] = {
        label: [(t, n) for (t, n) in _negation_edges(se) if t in schema.shapes]
        for label, se in schema.shapes.items()
    }

    def find_negative_cycle(start: str) -> Optional[List[str]]:
        # DFS over (label, crossed-negation) states.
        stack = [(start, False, [start])]
        seen: Set[Tuple[str, bool]] = set()
        while stack:
            label, crossed, path = stack.pop()
            for target, neg in edges.get(label, ()):
                crossed2 = crossed or neg
                if target == start and crossed2:
                    return path + [target]
                state = (target, crossed2)
                if state not in seen:
                    seen.add(state)
                    stack.append((target, crossed2, path + [target]))
        return None

    for label in schema.shapes:
        cycle = find_negative_cycle(label)
        if cycle is not None:
            diags.append(Diagnostic(label, "recursion through negation: " + " -> ".join(cycle)))
    return diags


class InclusionCycleError(ValueError):
    pass


def resolve_inclusions(schema: Schema) -> Schema:
    """Splice included shapes' triple expressions into each includer.

    The includer's closed/extra flags win; the included expression is
    prepended inside an EachOf. Copies are spliced (expressions are immutable
    values), and the operation is idempotent. Raises InclusionCycleError on
    cyclic inclusion.
    """
    order: List[str] = []
    state: Dict[str, int] = {}  # 0 visiting, 1 done

    def visit(label: str, trail: List[str]) -> None:
        if state.get(label) == 1:
            return
        if state.get(label) == 0:
            cycle = trail[trail.index(label):] + [label]
            raise InclusionCycleError("inclusion cycle: " + " -> ".join(cycle))
        state[label] = 0
        se = schema.shapes.get(label)
        if isinstance(se, Shape):
            for inc in se.includes:
                if inc in schema.shapes:
                    visit(inc, trail + [label])
        state[label] = 1
        order.append(label)

    for label in schema.shapes:
        visit(label, [])

    resolved: Dict[str, ShapeExpr] = {}
    for label in order:
        se = schema.shapes[label]
        if isinstance(se, Shape) and se.includes:
            parts: List[TripleExpr] = []
            for inc in se.includes:
                inc_se = resolved.get(inc, schema.shapes.get(inc))
                if isinstance(inc_se, Shape) and inc_se.expr is not None:
                    parts.append(inc_se.expr)
            if se.expr is not None:
                parts.append(se.expr)
            new_expr: Optional[TripleExpr]
            if not parts:
                new_expr = None
            elif len(parts) == 1:
                new_expr = parts[0]
            else:
                new_expr = EachOf(tuple(parts), ONE)
            resolved[label] = replace(se, expr=new_expr, includes=())
        else:
            resolved[label] = se
    return Schema(shapes={label: resolved[label] for label in schema.shapes}, prefix_map=dict(schema.prefix_map))


def mentioned_predicates(expr: TripleExpr) -> Tuple[Set[str], Set[str]]:
    """Predicates of non-negated TCs reachable in `expr`, split by direction."""
    forward: Set[str] = set()
    inverse: Set[str] = set()
    for node in _walk_triple_exprs(expr):
        if isinstance(node, TC) and not node.negated:
            (inverse if node.inverse else forward).add(node.predicate)
    return forward, inverse


def shape_mentioned_predicates(se: ShapeExpr) -> Tuple[Set[str], Set[str]]:
    """Mentioned predicates of a shape expression's own triple expression."""
    if isinstance(se, Shape) and se.expr is not None:
        return mentioned_predicates(se.expr)
    return set(), set()
