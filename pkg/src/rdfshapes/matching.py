"""Bag matching for triple expressions.

Matching asks: does an assignment of neighbourhood triples to triple
constraints exist whose per-constraint counts satisfy the expression's
cardinality structure? Triples that share the same set of admissible
constraints are interchangeable, so the search distributes group counts
instead of permuting individual triples, and the cardinality structure is
decided exactly by a recursive count-vector membership test:

  an expression repeated r times consumes a count vector v iff some total
  body-repetition count R in [r*min, r*max] works, where an each-group needs
  every child to consume its slice R times and a one-of group splits R among
  its children.

Worst case remains exponential (the problem is NP-complete in general);
constraint ordering and count grouping make schemas that are deterministic
in practice run in linear time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .shapes import Cardinality, EachOf, OneOf, TC, TripleExpr
from .terms import Triple


@dataclass
class Neighbourhood:
    """Triples around a focus node: outgoing, plus the incoming triples for
    inversely mentioned predicates."""

    out: List[Triple] = field(default_factory=list)
    inc: List[Triple] = field(default_factory=list)


@dataclass
class _Leaf:
    index: int
    tc: TC
    max_total: Optional[int]  # hard per-leaf cap across all repetitions (None = unbounded)


@dataclass
class _Node:
    kind: str  # 'leaf' | 'each' | 'one'
    card: Cardinality
    start: int  # leaf index range [start, end)
    end: int
    children: List["_Node"] = field(default_factory=list)
    leaf: Optional[_Leaf] = None


class CompiledExpr:
    """A triple expression with indexed leaves and a count-vector decider."""

    def __init__(self, expr: TripleExpr):
        self.expr = expr
        self.leaves: List[_Leaf] = []
        self.root = self._compile(expr, outer_max=1)
        self._memo: Dict[Tuple[int, Tuple[int, ...], int], bool] = {}

    def _compile(self, expr: TripleExpr, outer_max: Optional[int]) -> _Node:
        start = len(self.leaves)
        if isinstance(expr, TC):
            if expr.card.max is None or outer_max is None:
                cap = None
            else:
                cap = expr.card.max * outer_max
            leaf = _Leaf(index=start, tc=expr, max_total=cap)
            self.leaves.append(leaf)
            return _Node(kind="leaf", card=expr.card, start=start, end=start + 1, leaf=leaf)
        kind = "each" if isinstance(expr, EachOf) else "one"
        if expr.card.max is None or outer_max is None:
            inner_max = None
        else:
            inner_max = expr.card.max * outer_max
        children = [self._compile(child, inner_max) for child in expr.exprs]
        return _Node(kind=kind, card=expr.card, start=start, end=len(self.leaves), children=children)

    # -- count-vector membership ------------------------------------------

    def accepts(self, counts: Sequence[int]) -> bool:
        """True iff the whole expression can consume exactly these per-leaf counts."""
        return self._matches(self.root, tuple(counts), 1)

    def _matches(self, node: _Node, counts: Tuple[int, ...], r: int) -> bool:
        key = (id(node), counts[node.start : node.end], r)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        result = self._matches_uncached(node, counts, r)
        self._memo[key] = result
        return result

    def _matches_uncached(self, node: _Node, counts: Tuple[int, ...], r: int) -> bool:
        if node.kind == "leaf":
            c = counts[node.start]
            if r == 0 or node.leaf.tc.negated:
                return c == 0
            lo = node.card.min * r
            if c < lo:
                return False
            return node.card.max is None or c <= node.card.max * r
        total = sum(counts[node.start : node.end])
        if r == 0:
            return total == 0
        lo = node.card.min * r
        hi = max(lo, total)
        if node.card.max is not None:
            hi = min(hi, node.card.max * r)
        for reps in range(lo, hi + 1):
            if node.kind == "each":
                if all(self._matches(child, counts, reps) for child in node.children):
                    return True
            else:
                if self._split_one_of(node.children, counts, reps, 0):
                    return True
        return False

    def _split_one_of(self, children: List[_Node], counts: Tuple[int, ...], reps: int, i: int) -> bool:
        if i == len(children) - 1:
            return self._matches(children[i], counts, reps)
        child = children[i]
        child_total = sum(counts[child.start : child.end])
        for take in range(0, reps + 1):
            if take == 0 and child_total > 0:
                continue
            if self._matches(child, counts, take) and self._split_one_of(children, counts, reps - take, i + 1):
                return True
        return False

    # -- assignment search --------------------------------------------------

    def find_assignment(self, options: List[Tuple[FrozenSet[int], bool]]) -> Optional[List[int]]:
        """Search for a satisfying triple-to-leaf assignment.

        `options[i]` is (admissible leaf indices, may-be-dropped) for triple i.
        Returns per-leaf counts on success, None when no assignment satisfies
        the cardinality structure. (Which triple feeds which leaf does not
        matter beyond the counts; triples with equal option sets are
        interchangeable.)
        """
        groups: Dict[Tuple[FrozenSet[int], bool], int] = {}
        for opt in options:
            groups[opt] = groups.get(opt, 0) + 1
        # Most-constrained groups first.
        ordered = sorted(
            groups.items(),
            key=lambda kv: (len(kv[0][0]) + (1 if kv[0][1] else 0), kv[0][1], sorted(kv[0][0])),
        )
        counts = [0] * len(self.leaves)
        found: List[Optional[List[int]]] = [None]

        def assign(gi: int) -> bool:
            if gi == len(ordered):
                if self.accepts(counts):
                    found[0] = list(counts)
                    return True
                return False
            (leaf_set, droppable), n = ordered[gi]
            slots = sorted(leaf_set)

            def put(si: int, remaining: int) -> bool:
                if si == len(slots):
                    if remaining and not droppable:
                        return False
                    return assign(gi + 1)
                leaf = self.leaves[slots[si]]
                limit = remaining
                if leaf.max_total is not None:
                    limit = min(limit, leaf.max_total - counts[leaf.index])
                for take in range(limit, -1, -1):
                    counts[leaf.index] += take
                    if put(si + 1, remaining - take):
                        counts[leaf.index] -= take
                        return True
                    counts[leaf.index] -= take
                return False

            return put(0, n)

        assign(0)
        return found[0]
