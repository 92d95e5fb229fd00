"""The conformance engines.

Recursion is handled coinductively: re-encountering a (node, shape) pair
already on the evaluation stack counts as conformant. Verdicts computed
without consulting any stack assumption settle immediately; verdicts that
did consult assumptions stay provisional until every assumed pair settles
conformant (then they settle too) or some assumed pair settles
nonconformant (then they are discarded and recomputed on demand). Settled
verdicts never change within a run, so reports are deterministic and
independent of pair order.
"""

from __future__ import annotations

import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from .graph import Graph
from .matching import CompiledExpr, Neighbourhood
from .report import (
    CONFORMANT,
    Disagreement,
    NONCONFORMANT,
    NodeShapeResult,
    ReportStats,
    ValidationReport,
    Violation,
    term_text,
)
from .shacl import (
    AndConstraint,
    ClosedConstraint,
    InConstraint,
    NotConstraint,
    OrConstraint,
    PropertyConstraint,
    ShaclSchema,
    ShaclShape,
    scope_targets,
)
from .shapes import (
    NodeConstraint,
    Schema,
    Shape,
    ShapeAnd,
    ShapeExpr,
    ShapeNot,
    ShapeOr,
    ShapeRef,
    TC,
    mentioned_predicates,
    resolve_inclusions,
)
from .terms import Iri, Literal, BNode, RdfTerm, Triple

sys.setrecursionlimit(max(sys.getrecursionlimit(), 100000))

PairKey = Tuple[RdfTerm, str]


class UnknownShapeError(ValueError):
    pass


def satisfies_node_constraint(term: RdfTerm, nc: NodeConstraint) -> bool:
    """True iff the term meets every facet present on the constraint."""
    if nc.node_kind is not None:
        kind_ok = (
            (nc.node_kind == "IRI" and isinstance(term, Iri))
            or (nc.node_kind == "Literal" and isinstance(term, Literal))
            or (nc.node_kind == "BNode" and isinstance(term, BNode))
        )
        if not kind_ok:
            return False
    if nc.datatype is not None:
        if not isinstance(term, Literal) or term.datatype != nc.datatype:
            return False
    if nc.value_set is not None and term not in nc.value_set:
        return False
    return True


class AssumptionSet:
    """Recursion state: stack of assumed pairs plus a memo of verdicts.

    `settled` holds final verdicts; `pending` holds verdicts conditional on
    the assumptions they consulted (tracked per evaluation frame).
    """

    def __init__(self) -> None:
        self.settled: Dict[PairKey, NodeShapeResult] = {}
        self.pending: Dict[PairKey, Tuple[NodeShapeResult, FrozenSet[PairKey]]] = {}
        self.pending_deps: Dict[PairKey, Set[PairKey]] = {}
        self.stack: Dict[PairKey, None] = {}
        self.frames: List[Set[PairKey]] = []

    def __contains__(self, key: PairKey) -> bool:
        return key in self.stack

    def evaluate(self, key: PairKey, compute) -> NodeShapeResult:
        hit = self.settled.get(key)
        if hit is not None:
            return hit
        if key in self.stack:
            if self.frames:
                self.frames[-1].add(key)
            return NodeShapeResult(node=key[0], shape=key[1], status=CONFORMANT)
        pend = self.pending.get(key)
        if pend is not None:
            result, used = pend
            if used <= self.stack.keys():
                if self.frames:
                    self.frames[-1] |= used
                return result
            self._drop_pending(key)
        self.stack[key] = None
        self.frames.append(set())
        try:
            result = compute()
        finally:
            frame = self.frames.pop()
            del self.stack[key]
        frame.discard(key)
        if frame:
            self.pending[key] = (result, frozenset(frame))
            for dep in frame:
                self.pending_deps.setdefault(dep, set()).add(key)
            if self.frames:
                self.frames[-1] |= frame
        else:
            self._settle(key, result)
        return result

    def _drop_pending(self, key: PairKey) -> None:
        self.pending.pop(key, None)

    def _settle(self, key: PairKey, result: NodeShapeResult) -> None:
        self.settled[key] = result
        work = [key]
        while work:
            current = work.pop()
            for dependent in sorted(self.pending_deps.pop(current, ()), key=lambda k: (term_text(k[0]), k[1])):
                entry = self.pending.get(dependent)
                if entry is None:
                    continue
                res, used = entry
                if any(u in self.settled and not self.settled[u].conformant for u in used):
                    self._drop_pending(dependent)
                elif all(u in self.settled and self.settled[u].conformant for u in used):
                    self._drop_pending(dependent)
                    self.settled[dependent] = res
                    work.append(dependent)


# ---------------------------------------------------------------------------
# ShEx engine


@dataclass
class _ShapeInfo:
    compiled: Optional[CompiledExpr]
    fwd_mentioned: Set[str]
    inv_mentioned: Set[str]
    negated: List[TC]
    inv_fetch: Set[str]  # predicates needing incoming-triple lookup


class ShexEngine:
    def __init__(self, g: Graph, schema: Schema, asm: Optional[AssumptionSet] = None):
        self.g = g
        self.schema = resolve_inclusions(schema)
        self.asm = asm if asm is not None else AssumptionSet()
        self._shape_info: Dict[int, _ShapeInfo] = {}

    def conforms(self, node: RdfTerm, label: str) -> NodeShapeResult:
        se = self.schema.shapes.get(label)
        if se is None:
            raise UnknownShapeError(f"unknown shape label {label}")
        return self.asm.evaluate((node, label), lambda: self._eval(node, label, se))

    def _eval(self, node: RdfTerm, label: str, se: ShapeExpr) -> NodeShapeResult:
        if isinstance(se, NodeConstraint):
            if satisfies_node_constraint(node, se):
                return NodeShapeResult(node, label, CONFORMANT)
            return NodeShapeResult(
                node,
                label,
                NONCONFORMANT,
                [Violation("node-constraint", f"term {term_text(node)} does not satisfy {_nc_text(se)}")],
            )
        if isinstance(se, ShapeRef):
            inner = self.conforms(node, se.label)
            if inner.conformant:
                return NodeShapeResult(node, label, CONFORMANT)
            return NodeShapeResult(
                node, label, NONCONFORMANT, [Violation("ref", f"does not conform to {se.label}", nested=[inner])]
            )
        if isinstance(se, ShapeAnd):
            results = [self._eval(node, label, child) for child in se.exprs]
            bad = [r for r in results if not r.conformant]
            if not bad:
                return NodeShapeResult(node, label, CONFORMANT)
            reasons = [v for r in bad for v in r.reasons]
            return NodeShapeResult(node, label, NONCONFORMANT, reasons or [Violation("and", "conjunct failed")])
        if isinstance(se, ShapeOr):
            results = [self._eval(node, label, child) for child in se.exprs]
            if any(r.conformant for r in results):
                return NodeShapeResult(node, label, CONFORMANT)
            reasons = [v for r in results for v in r.reasons]
            return NodeShapeResult(node, label, NONCONFORMANT, reasons or [Violation("or", "no disjunct satisfied")])
        if isinstance(se, ShapeNot):
            inner = self._eval(node, label, se.inner)
            if inner.conformant:
                return NodeShapeResult(
                    node, label, NONCONFORMANT, [Violation("not", "negated shape expression is satisfied")]
                )
            return NodeShapeResult(node, label, CONFORMANT)
        assert isinstance(se, Shape)
        return self._match_shape_body(node, label, se)

    # -- triple expression matching ---------------------------------------

    def _info_for(self, shape: Shape) -> _ShapeInfo:
        info = self._shape_info.get(id(shape))
        if info is not None:
            return info
        if shape.expr is None:
            info = _ShapeInfo(None, set(), set(), [], set())
        else:
            fwd, inv = mentioned_predicates(shape.expr)
            negated = _collect_negated(shape.expr)
            inv_fetch = set(inv) | {tc.predicate for tc in negated if tc.inverse}
            info = _ShapeInfo(CompiledExpr(shape.expr), fwd, inv, negated, inv_fetch)
        self._shape_info[id(shape)] = info
        return info

    def _value_matches(self, value_node: RdfTerm, se: ShapeExpr) -> Tuple[bool, Optional[NodeShapeResult]]:
        if isinstance(se, NodeConstraint):
            return satisfies_node_constraint(value_node, se), None
        if isinstance(se, ShapeRef):
            result = self.conforms(value_node, se.label)
            return result.conformant, result
        result = self._eval(value_node, "(inline)", se)
        return result.conformant, result

    def _match_shape_body(self, node: RdfTerm, label: str, shape: Shape) -> NodeShapeResult:
        info = self._info_for(shape)
        out = self.g.triples_out(node)
        inc: List[Triple] = []
        if info.inv_fetch:
            inc = [t for t in self.g.triples_in(node) if t.predicate.value in info.inv_fetch]
        violations: List[Violation] = []

        # Negated constraints: no matching triple may exist at all.
        for tc in info.negated:
            side = inc if tc.inverse else out
            for t in side:
                if t.predicate.value != tc.predicate:
                    continue
                value_node = t.subject if tc.inverse else t.object
                ok, _ = self._value_matches(value_node, tc.value)
                if ok:
                    violations.append(
                        Violation(
                            "negation",
                            f"forbidden predicate {tc.predicate} has a matching value",
                            predicate=tc.predicate,
                            found=term_text(value_node),
                        )
                    )
                    break
        if violations:
            return NodeShapeResult(node, label, NONCONFORMANT, violations)

        pool = list(dict.fromkeys(out + inc))
        inc_set = set(inc)
        out_set = set(out)
        options: List[Tuple[FrozenSet[int], bool]] = []
        nested_failures: Dict[int, NodeShapeResult] = {}
        compiled = info.compiled
        leaves = compiled.leaves if compiled is not None else []
        for t in pool:
            pred = t.predicate.value
            fwd_app = t in out_set
            inv_app = t in inc_set
            relevant_fwd = fwd_app and pred in info.fwd_mentioned
            relevant_inv = inv_app and pred in info.inv_mentioned
            if not (relevant_fwd or relevant_inv):
                if shape.closed and fwd_app and pred not in shape.extra:
                    violations.append(
                        Violation(
                            "closed",
                            f"predicate {pred} is not declared on a closed shape",
                            predicate=pred,
                            found=term_text(t.object),
                        )
                    )
                continue
            leaf_ids: Set[int] = set()
            for leaf in leaves:
                tc = leaf.tc
                if tc.negated or tc.predicate != pred:
                    continue
                if (tc.inverse and not inv_app) or (not tc.inverse and not fwd_app):
                    continue
                value_node = t.subject if tc.inverse else t.object
                ok, nested = self._value_matches(value_node, tc.value)
                if ok:
                    leaf_ids.add(leaf.index)
                elif nested is not None and leaf.index not in nested_failures:
                    nested_failures[leaf.index] = nested
            droppable = not relevant_inv and pred in shape.extra
            if not leaf_ids and not droppable:
                v = Violation(
                    "unmatched",
                    f"triple with predicate {pred} matches no constraint and {pred} is not EXTRA",
                    predicate=pred,
                    found=term_text(t.subject if relevant_inv and not relevant_fwd else t.object),
                )
                failing = [nf for li, nf in nested_failures.items() if leaves[li].tc.predicate == pred and not nf.conformant]
                if failing:
                    v.nested = [failing[0]]
                violations.append(v)
                continue
            options.append((frozenset(leaf_ids), droppable))
        if violations:
            return NodeShapeResult(node, label, NONCONFORMANT, violations)

        if compiled is None:
            return NodeShapeResult(node, label, CONFORMANT)

        counts = compiled.find_assignment(options)
        if counts is not None:
            return NodeShapeResult(node, label, CONFORMANT)
        violations = self._diagnose(node, options, compiled, nested_failures)
        return NodeShapeResult(node, label, NONCONFORMANT, violations)

    def _diagnose(
        self,
        node: RdfTerm,
        options: List[Tuple[FrozenSet[int], bool]],
        compiled: CompiledExpr,
        nested_failures: Dict[int, NodeShapeResult],
    ) -> List[Violation]:
        violations: List[Violation] = []
        available = {leaf.index: 0 for leaf in compiled.leaves}
        for leaf_ids, _ in options:
            for li in leaf_ids:
                available[li] += 1
        for leaf in compiled.leaves:
            if leaf.tc.negated:
                continue
            lo = _required_min(compiled.root, leaf.index)
            have = available[leaf.index]
            card = leaf.tc.card
            if have < lo:
                direction = "^" if leaf.tc.inverse else ""
                v = Violation(
                    "cardinality",
                    f"predicate {direction}{leaf.tc.predicate}: expected at least {lo} matching "
                    f"triple(s) ({card.text() or '{1,1}'}), found {have}",
                    predicate=leaf.tc.predicate,
                    expected=card.text() or "{1,1}",
                    found=str(have),
                )
                nf = nested_failures.get(leaf.index)
                if nf is not None:
                    v.nested = [nf]
                violations.append(v)
            elif card.max is not None and have > card.max and _required_min(compiled.root, leaf.index) == card.min:
                pass  # surplus alone is not provably wrong; the generic reason covers it
        if not violations:
            violations.append(
                Violation("assignment", f"no consistent assignment of {len(options)} triple(s) to the shape's constraints")
            )
        return violations


def _required_min(root, leaf_index: int) -> int:
    """Product of minimum cardinalities along the path to the leaf."""

    def walk(node, factor: int) -> Optional[int]:
        if node.kind == "leaf":
            if node.start == leaf_index:
                return factor * node.card.min
            return None
        if not (node.start <= leaf_index < node.end):
            return None
        for child in node.children:
            res = walk(child, factor * node.card.min)
            if res is not None:
                return res
        return None

    result = walk(root, 1)
    return result if result is not None else 0


def _collect_negated(expr) -> List[TC]:
    if isinstance(expr, TC):
        return [expr] if expr.negated else []
    out: List[TC] = []
    for child in expr.exprs:
        out.extend(_collect_negated(child))
    return out


def _nc_text(nc: NodeConstraint) -> str:
    parts = []
    if nc.wildcard:
        parts.append(".")
    if nc.node_kind:
        parts.append(nc.node_kind)
    if nc.datatype:
        parts.append(f"datatype {nc.datatype}")
    if nc.value_set is not None:
        parts.append("[" + " ".join(sorted(term_text(v) for v in nc.value_set)) + "]")
    return " ".join(parts) if parts else "(empty)"


def match_shape(
    g: Graph, focus: RdfTerm, label: str, schema: Schema, asm: Optional[AssumptionSet] = None
) -> NodeShapeResult:
    """Match one focus node against one shape of a well-formed schema."""
    return ShexEngine(g, schema, asm).conforms(focus, label)


def validate_shape_map(
    g: Graph, schema: Schema, pairs: Sequence[Tuple[RdfTerm, str]], threads: int = 1
) -> ValidationReport:
    """Validate every (node, shape label) pair; memo shared within the run."""
    started = time.perf_counter()
    results: List[Optional[NodeShapeResult]] = [None] * len(pairs)
    if threads <= 1:
        engine = ShexEngine(g, schema)
        for i, (node, label) in enumerate(pairs):
            results[i] = engine.conforms(node, label)
    else:
        resolved = resolve_inclusions(schema)
        chunks: List[List[Tuple[int, RdfTerm, str]]] = [[] for _ in range(threads)]
        for i, (node, label) in enumerate(pairs):
            chunks[i % threads].append((i, node, label))

        def run_chunk(chunk):
            engine = ShexEngine(g, resolved)
            return [(i, engine.conforms(node, label)) for i, node, label in chunk]

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(run_chunk, chunks):
                for i, result in part:
                    results[i] = result
    report = ValidationReport(results=[r for r in results if r is not None])
    report.recount((time.perf_counter() - started) * 1000.0)
    return report


# ---------------------------------------------------------------------------
# SHACL engine


class ShaclEngine:
    def __init__(self, g: Graph, schema: ShaclSchema, asm: Optional[AssumptionSet] = None):
        self.g = g
        self.schema = schema
        self.asm = asm if asm is not None else AssumptionSet()

    def conforms(self, node: RdfTerm, label: str) -> NodeShapeResult:
        shape = self.schema.shapes.get(label)
        if shape is None:
            raise UnknownShapeError(f"unknown shape label {label}")
        return self.asm.evaluate((node, label), lambda: self._eval(node, shape))

    def _eval(self, node: RdfTerm, shape: ShaclShape) -> NodeShapeResult:
        if shape.filter is not None and not self.conforms(node, shape.filter).conformant:
            return NodeShapeResult(node, shape.label, CONFORMANT)
        violations: List[Violation] = []
        for pc in shape.property_constraints:
            violations.extend(self._eval_property(node, pc))
        for nc in shape.node_constraints:
            violations.extend(self._eval_node_constraint(node, shape, nc))
        status = CONFORMANT if not violations else NONCONFORMANT
        return NodeShapeResult(node, shape.label, status, violations)

    def _eval_property(self, node: RdfTerm, pc: PropertyConstraint) -> List[Violation]:
        if pc.filter_shape is not None and not self.conforms(node, pc.filter_shape).conformant:
            return []
        values = self.g.values_for(node, Iri(pc.predicate))
        violations: List[Violation] = []
        n = len(values)
        if n < pc.min_count:
            violations.append(
                Violation(
                    "minCount",
                    f"predicate {pc.predicate}: expected at least {pc.min_count} value(s), found {n}",
                    predicate=pc.predicate,
                    expected=f">= {pc.min_count}",
                    found=str(n),
                )
            )
        if pc.max_count is not None and n > pc.max_count:
            violations.append(
                Violation(
                    "maxCount",
                    f"predicate {pc.predicate}: expected at most {pc.max_count} value(s), found {n}",
                    predicate=pc.predicate,
                    expected=f"<= {pc.max_count}",
                    found=str(n),
                )
            )
        if pc.datatype is not None:
            for v in values:
                if not isinstance(v, Literal) or v.datatype != pc.datatype:
                    violations.append(
                        Violation(
                            "datatype",
                            f"predicate {pc.predicate}: value {term_text(v)} is not a literal of {pc.datatype}",
                            predicate=pc.predicate,
                            expected=pc.datatype,
                            found=term_text(v),
                        )
                    )
        if pc.node_kind == "IRI":
            for v in values:
                if not isinstance(v, Iri):
                    violations.append(
                        Violation(
                            "nodeKind",
                            f"predicate {pc.predicate}: value {term_text(v)} is not an IRI",
                            predicate=pc.predicate,
                            expected="IRI",
                            found=term_text(v),
                        )
                    )
        if pc.in_set is not None:
            allowed = set(pc.in_set)
            for v in values:
                if v not in allowed:
                    violations.append(
                        Violation(
                            "in",
                            f"predicate {pc.predicate}: value {term_text(v)} is not in the allowed set",
                            predicate=pc.predicate,
                            found=term_text(v),
                        )
                    )
        if pc.has_value is not None and pc.has_value not in values:
            violations.append(
                Violation(
                    "hasValue",
                    f"predicate {pc.predicate}: required value {term_text(pc.has_value)} is missing",
                    predicate=pc.predicate,
                    expected=term_text(pc.has_value),
                )
            )
        if pc.value_shape is not None:
            for v in values:
                result = self.conforms(v, pc.value_shape)
                if not result.conformant:
                    violations.append(
                        Violation(
                            "valueShape",
                            f"predicate {pc.predicate}: value {term_text(v)} does not conform to {pc.value_shape}",
                            predicate=pc.predicate,
                            expected=pc.value_shape,
                            found=term_text(v),
                            nested=[result],
                        )
                    )
        if pc.qualified_value_shape is not None:
            conforming = sum(1 for v in values if self.conforms(v, pc.qualified_value_shape).conformant)
            if conforming < pc.qualified_min_count or (
                pc.qualified_max_count is not None and conforming > pc.qualified_max_count
            ):
                hi = "*" if pc.qualified_max_count is None else str(pc.qualified_max_count)
                violations.append(
                    Violation(
                        "qualified",
                        f"predicate {pc.predicate}: {conforming} value(s) conform to the qualified shape, "
                        f"expected [{pc.qualified_min_count}..{hi}]",
                        predicate=pc.predicate,
                        expected=f"[{pc.qualified_min_count}..{hi}]",
                        found=str(conforming),
                    )
                )
        return violations

    def _eval_node_constraint(self, node: RdfTerm, shape: ShaclShape, nc) -> List[Violation]:
        if isinstance(nc, InConstraint):
            if node not in set(nc.values):
                return [Violation("in", f"focus node {term_text(node)} is not in the allowed set", found=term_text(node))]
            return []
        if isinstance(nc, OrConstraint):
            results = [self.conforms(node, lbl) for lbl in nc.shapes]
            if any(r.conformant for r in results):
                return []
            return [Violation("or", "no alternative shape is satisfied", nested=[r for r in results])]
        if isinstance(nc, AndConstraint):
            results = [self.conforms(node, lbl) for lbl in nc.shapes]
            bad = [r for r in results if not r.conformant]
            if not bad:
                return []
            return [Violation("and", "a conjunct shape is violated", nested=bad)]
        if isinstance(nc, NotConstraint):
            inner = self.conforms(node, nc.shape)
            if inner.conformant:
                return [Violation("not", f"negated shape {nc.shape} is satisfied")]
            return []
        assert isinstance(nc, ClosedConstraint)
        declared = {pc.predicate for pc in shape.property_constraints} | nc.ignored_properties
        violations: List[Violation] = []
        seen: Set[str] = set()
        for t in self.g.triples_out(node):
            pred = t.predicate.value
            if pred not in declared and pred not in seen:
                seen.add(pred)
                violations.append(
                    Violation(
                        "closed",
                        f"predicate {pred} is not declared on a closed shape",
                        predicate=pred,
                        found=term_text(t.object),
                    )
                )
        return violations


def validate_shacl(
    g: Graph,
    schema: ShaclSchema,
    pairs: Optional[Sequence[Tuple[RdfTerm, str]]] = None,
    threads: int = 1,
) -> ValidationReport:
    """Validate scope targets (or explicit pairs) against a SHACL schema."""
    started = time.perf_counter()
    if pairs is None:
        pairs = scope_targets(schema, g)
    results: List[Optional[NodeShapeResult]] = [None] * len(pairs)
    if threads <= 1:
        engine = ShaclEngine(g, schema)
        for i, (node, label) in enumerate(pairs):
            results[i] = engine.conforms(node, label)
    else:
        chunks: List[List[Tuple[int, RdfTerm, str]]] = [[] for _ in range(threads)]
        for i, (node, label) in enumerate(pairs):
            chunks[i % threads].append((i, node, label))

        def run_chunk(chunk):
            engine = ShaclEngine(g, schema)
            return [(i, engine.conforms(node, label)) for i, node, label in chunk]

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for part in pool.map(run_chunk, chunks):
                for i, result in part:
                    results[i] = result
    report = ValidationReport(results=[r for r in results if r is not None])
    report.recount((time.perf_counter() - started) * 1000.0)
    return report


def engines_agree(
    g: Graph, shex_schema: Schema, shacl_schema: ShaclSchema, pairs: Sequence[Tuple[RdfTerm, str]]
) -> List[Disagreement]:
    """Cross-check both engines on the same pairs; empty list means agreement."""
    shex_report = validate_shape_map(g, shex_schema, pairs)
    shacl_report = validate_shacl(g, shacl_schema, pairs=pairs)
    disagreements: List[Disagreement] = []
    for (node, label), a, b in zip(pairs, shex_report.results, shacl_report.results):
        if a.status != b.status:
            disagreements.append(Disagreement(node=node, shape=label, shex=a, shacl=b))
    return disagreements
