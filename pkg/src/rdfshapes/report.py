"""Conformance verdicts and reports.

A NodeShapeResult is the per (node, shape) verdict with a tree of violation
records; a ValidationReport aggregates results with counts and elapsed wall
time. Reports serialize to a line-delimited JSON format (one record per
result, reasons flattened to paths) plus a human-readable summary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

from .terms import BNode, Iri, Literal, RdfTerm

CONFORMANT = "conformant"
NONCONFORMANT = "nonconformant"


@dataclass
class Violation:
    """One violation record: what was expected around which predicate."""

    kind: str
    message: str
    predicate: Optional[str] = None
    expected: Optional[str] = None
    found: Optional[str] = None
    nested: List["NodeShapeResult"] = field(default_factory=list)

    def paths(self, prefix: str = "") -> List[str]:
        text = self.message if not prefix else f"{prefix} > {self.message}"
        out = [text]
        for res in self.nested:
            for v in res.reasons:
                out.extend(v.paths(f"{text} > [{term_text(res.node)}@{res.shape}]"))
        return out


@dataclass
class NodeShapeResult:
    node: RdfTerm
    shape: str
    status: str  # CONFORMANT | NONCONFORMANT
    reasons: List[Violation] = field(default_factory=list)

    @property
    def conformant(self) -> bool:
        return self.status == CONFORMANT


@dataclass
class ReportStats:
    nodes: int = 0
    conformant: int = 0
    nonconformant: int = 0
    elapsed_ms: float = 0.0


@dataclass
class ValidationReport:
    results: List[NodeShapeResult] = field(default_factory=list)
    stats: ReportStats = field(default_factory=ReportStats)

    def all_conformant(self) -> bool:
        return all(r.conformant for r in self.results)

    def recount(self, elapsed_ms: float) -> None:
        self.stats = ReportStats(
            nodes=len(self.results),
            conformant=sum(1 for r in self.results if r.conformant),
            nonconformant=sum(1 for r in self.results if not r.conformant),
            elapsed_ms=elapsed_ms,
        )


def term_text(term: RdfTerm) -> str:
    if isinstance(term, Iri):
        return term.value
    if isinstance(term, BNode):
        return "_:" + term.label
    assert isinstance(term, Literal)
    if term.lang is not None:
        return f'"{term.lexical_form}"@{term.lang}'
    return f'"{term.lexical_form}"^^{term.datatype}'


def result_record(result: NodeShapeResult) -> dict:
    reasons: List[str] = []
    for v in result.reasons:
        reasons.extend(v.paths())
    return {
        "node": term_text(result.node),
        "shape": result.shape,
        "status": result.status,
        "reasons": reasons,
    }


def serialize_report(report: ValidationReport) -> str:
    """One JSON record per result, line-delimited."""
    return "".join(json.dumps(result_record(r), sort_keys=True) + "\n" for r in report.results)


def summarize_report(report: ValidationReport) -> str:
    s = report.stats
    lines = [
        f"nodes validated: {s.nodes}",
        f"conformant:      {s.conformant}",
        f"nonconformant:   {s.nonconformant}",
        f"elapsed:         {s.elapsed_ms:.1f} ms",
    ]
    for r in report.results:
        if not r.conformant:
            lines.append(f"  FAIL {term_text(r.node)} @ {r.shape}")
            for v in r.reasons:
                for path in v.paths():
                    lines.append(f"       - {path}")
    return "\n".join(lines) + "\n"


@dataclass
class Disagreement:
    node: RdfTerm
    shape: str
    shex: NodeShapeResult
    shacl: NodeShapeResult
