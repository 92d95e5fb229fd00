"""Brute-force matching oracle.

An independent, exhaustively enumerating implementation of the bag matching
rules, for testing the production matcher against. It enumerates assigned
subsets as bitmasks over the neighbourhood and decides exact consumption by
recursive bag partitioning; nothing is shared with the count-vector matcher.
Capped at a small neighbourhood size because the search is exponential on
purpose.
"""

from __future__ import annotations

from typing import Callable, FrozenSet, List, Optional, Set, Tuple

from .matching import Neighbourhood
from .shapes import EachOf, OneOf, TC, TripleExpr, mentioned_predicates
from .terms import Triple

ValueOracle = Callable[[Triple, object], bool]


class OracleBoundError(ValueError):
    pass


def _submasks(mask: int):
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _negated_tcs(expr: TripleExpr) -> List[TC]:
    if isinstance(expr, TC):
        return [expr] if expr.negated else []
    out: List[TC] = []
    for child in expr.exprs:
        out.extend(_negated_tcs(child))
    return out


class _BruteForce:
    def __init__(self, pool: List[Triple], fwd_app: List[bool], inv_app: List[bool], value_oracle: ValueOracle):
        self.pool = pool
        self.fwd_app = fwd_app
        self.inv_app = inv_app
        self.value_oracle = value_oracle
        self.memo_bf = {}
        self.memo_can = {}
        self.memo_split = {}
        self.memo_tc = {}

    def triple_matches_tc(self, i: int, tc: TC) -> bool:
        key = (i, id(tc))
        hit = self.memo_tc.get(key)
        if hit is None:
            t = self.pool[i]
            applicable = self.inv_app[i] if tc.inverse else self.fwd_app[i]
            hit = applicable and t.predicate.value == tc.predicate and self.value_oracle(t, tc.value)
            self.memo_tc[key] = hit
        return hit

    def bf(self, mask: int, expr: TripleExpr) -> bool:
        """Can `expr` consume exactly the triples in `mask`?"""
        key = (mask, id(expr))
        hit = self.memo_bf.get(key)
        if hit is not None:
            return hit
        if isinstance(expr, TC):
            if expr.negated:
                result = mask == 0
            else:
                count = bin(mask).count("1")
                ok = True
                m = mask
                i = 0
                while m:
                    if m & 1 and not self.triple_matches_tc(i, expr):
                        ok = False
                        break
                    m >>= 1
                    i += 1
                result = (
                    ok
                    and expr.card.min <= count
                    and (expr.card.max is None or count <= expr.card.max)
                )
        else:
            count = bin(mask).count("1")
            hi = expr.card.max if expr.card.max is not None else max(expr.card.min, count)
            hi = min(hi, max(expr.card.min, count))
            result = any(self.can_consume_r(mask, expr, r) for r in range(expr.card.min, hi + 1))
        self.memo_bf[key] = result
        return result

    def can_consume_r(self, mask: int, expr: TripleExpr, r: int) -> bool:
        """Can r body repetitions of the group consume exactly `mask`?"""
        key = (mask, id(expr), r)
        hit = self.memo_can.get(key)
        if hit is not None:
            return hit
        if r == 0:
            result = mask == 0
        else:
            result = False
            for sub in _submasks(mask):
                if self.body_once(sub, expr) and self.can_consume_r(mask & ~sub, expr, r - 1):
                    result = True
                    break
        self.memo_can[key] = result
        return result

    def body_once(self, mask: int, expr) -> bool:
        if isinstance(expr, OneOf):
            return any(self.bf(mask, child) for child in expr.exprs)
        return self.split_children(mask, expr, 0)

    def split_children(self, mask: int, each: EachOf, idx: int) -> bool:
        if idx == len(each.exprs):
            return mask == 0
        key = (mask, id(each), idx)
        hit = self.memo_split.get(key)
        if hit is not None:
            return hit
        result = False
        for sub in _submasks(mask):
            if self.bf(sub, each.exprs[idx]) and self.split_children(mask & ~sub, each, idx + 1):
                result = True
                break
        self.memo_split[key] = result
        return result


def brute_force_match(
    neigh: Neighbourhood,
    expr: Optional[TripleExpr],
    value_oracle: ValueOracle,
    extra: FrozenSet[str] = frozenset(),
    closed: bool = False,
    bound: int = 8,
) -> bool:
    """Exhaustively decide whether the neighbourhood satisfies the expression.

    Enumerates every assigned subset, every one-of branch selection, and
    every repetition count (bounded by the neighbourhood size), then applies
    the unassigned-triple rules: an unassigned outgoing triple whose
    predicate the expression mentions must be EXTRA; a visible incoming
    triple must be assigned; a closed shape requires every unassigned
    outgoing triple to be EXTRA; a negated constraint must match nothing.
    Incoming triples whose predicate is not inversely mentioned (or inversely
    negated) are invisible.
    """
    out_set = list(dict.fromkeys(neigh.out))
    inc_set = set(neigh.inc)
    pool = list(dict.fromkeys(list(neigh.out) + list(neigh.inc)))
    if len(pool) > bound:
        raise OracleBoundError(f"neighbourhood size {len(pool)} exceeds oracle bound {bound}")
    out_membership = set(out_set)
    fwd_app = [t in out_membership for t in pool]
    inv_app = [t in inc_set for t in pool]

    if expr is None:
        fwd_mentioned: Set[str] = set()
        inv_mentioned: Set[str] = set()
        negated: List[TC] = []
    else:
        fwd_mentioned, inv_mentioned = mentioned_predicates(expr)
        negated = _negated_tcs(expr)

    engine = _BruteForce(pool, fwd_app, inv_app, value_oracle)

    # Negated constraints veto independently of any assignment.
    for tc in negated:
        for i in range(len(pool)):
            if engine.triple_matches_tc(i, TC(tc.predicate, tc.value, tc.card, tc.inverse, negated=False)):
                return False

    matchable_mask = 0
    must_assign_mask = 0  # visible incoming triples
    for i, t in enumerate(pool):
        pred = t.predicate.value
        relevant_fwd = fwd_app[i] and pred in fwd_mentioned
        relevant_inv = inv_app[i] and pred in inv_mentioned
        if relevant_fwd or relevant_inv:
            matchable_mask |= 1 << i
            if relevant_inv:
                must_assign_mask |= 1 << i

    def unassigned_ok(i: int) -> bool:
        pred = pool[i].predicate.value
        if must_assign_mask & (1 << i):
            return False
        if fwd_app[i] and pred in fwd_mentioned and pred not in extra:
            return False
        if closed and fwd_app[i] and pred not in extra:
            return False
        return True

    # Triples outside the matchable set can never be assigned; check their
    # unassigned legality once.
    for i in range(len(pool)):
        if not (matchable_mask & (1 << i)) and not unassigned_ok(i):
            return False

    if expr is None:
        return matchable_mask == 0  # nothing can be assigned; leftovers already checked

    for assigned in _submasks(matchable_mask):
        leftovers = matchable_mask & ~assigned
        ok = True
        m = leftovers
        i = 0
        while m:
            if m & 1 and not unassigned_ok(i):
                ok = False
                break
            m >>= 1
            i += 1
        if ok and engine.bf(assigned, expr):
            return True
    return False
