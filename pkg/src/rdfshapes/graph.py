"""Immutable, indexed triple store.

A Graph is a set of triples (duplicates collapse) with three indexes:
by subject, by object, and by (subject, predicate). It is immutable after
construction and therefore safe to share across any number of concurrent
validation workers.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .terms import BNode, Iri, Literal, RdfTerm, Triple, term_sort_key, triple_sort_key


class Graph:
    __slots__ = ("_triples", "_by_subject", "_by_object", "_by_subject_pred", "prefix_map")

    def __init__(self, triples: Iterable[Triple] = (), prefix_map: Optional[Mapping[str, str]] = None):
        self._triples: frozenset = frozenset(triples)
        self.prefix_map: Dict[str, str] = dict(prefix_map or {})
        by_subject: Dict[RdfTerm, List[Triple]] = {}
        by_object: Dict[RdfTerm, List[Triple]] = {}
        by_sp: Dict[Tuple[RdfTerm, str], List[Triple]] = {}
        for t in sorted(self._triples, key=triple_sort_key):
            by_subject.setdefault(t.subject, []).append(t)
            by_object.setdefault(t.object, []).append(t)
            by_sp.setdefault((t.subject, t.predicate.value), []).append(t)
        self._by_subject = by_subject
        self._by_object = by_object
        self._by_subject_pred = by_sp

    @property
    def triples(self) -> frozenset:
        return self._triples

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self):
        return iter(sorted(self._triples, key=triple_sort_key))

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other) -> bool:
        # Prefix maps are serialization sugar, not graph content.
        return isinstance(other, Graph) and self._triples == other._triples

    def __hash__(self) -> int:
        return hash(self._triples)

    def triples_out(self, node: RdfTerm) -> List[Triple]:
        """All triples with `node` as subject (the forward neighbourhood bag)."""
        return list(self._by_subject.get(node, ()))

    def triples_in(self, node: RdfTerm) -> List[Triple]:
        """All triples with `node` as object (the inverse neighbourhood bag)."""
        return list(self._by_object.get(node, ()))

    def values_for(self, node: RdfTerm, pred: Iri) -> List[RdfTerm]:
        """Objects of (node, pred, ·) in term-sorted order."""
        hits = self._by_subject_pred.get((node, pred.value), ())
        return sorted({t.object for t in hits}, key=term_sort_key)

    def subjects(self) -> List[RdfTerm]:
        return sorted(self._by_subject.keys(), key=term_sort_key)

    def expand_list(self, head: RdfTerm) -> List[RdfTerm]:
        """Walk an rdf:first/rdf:rest chain to rdf:nil.

        Raises ValueError for malformed lists (missing first/rest, a node
        with several first/rest values, or a cycle).
        """
        from .terms import RDF_FIRST, RDF_NIL, RDF_REST

        items: List[RdfTerm] = []
        seen = set()
        node = head
        while True:
            if isinstance(node, Iri) and node.value == RDF_NIL:
                return items
            if node in seen:
                raise ValueError(f"malformed rdf list: cycle at {node!r}")
            seen.add(node)
            firsts = self.values_for(node, Iri(RDF_FIRST))
            rests = self.values_for(node, Iri(RDF_REST))
            if len(firsts) != 1 or len(rests) != 1:
                raise ValueError(f"malformed rdf list at {node!r}: first={len(firsts)} rest={len(rests)}")
            items.append(firsts[0])
            node = rests[0]
