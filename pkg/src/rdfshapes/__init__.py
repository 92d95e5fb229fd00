"""RDF shape validation toolkit.

Parses Turtle data and ShEx compact syntax schemas, loads SHACL-core shapes
graphs, validates graphs under bag semantics with recursion, generates
WebIndex-style benchmark data deterministically, and drives performance
sweeps from the command line.
"""

from .engine import (
    AssumptionSet,
    ShaclEngine,
    ShexEngine,
    UnknownShapeError,
    engines_agree,
    match_shape,
    satisfies_node_constraint,
    validate_shacl,
    validate_shape_map,
)
from .graph import Graph
from .matching import Neighbourhood
from .oracle import OracleBoundError, brute_force_match
from .report import (
    CONFORMANT,
    Disagreement,
    NONCONFORMANT,
    NodeShapeResult,
    ReportStats,
    ValidationReport,
    Violation,
    serialize_report,
    summarize_report,
)
from .shacl import ShaclLoadError, ShaclSchema, load_shacl, scope_targets
from .shapes import (
    Cardinality,
    Diagnostic,
    EachOf,
    InclusionCycleError,
    NodeConstraint,
    OneOf,
    Schema,
    Shape,
    ShapeAnd,
    ShapeNot,
    ShapeOr,
    ShapeRef,
    TC,
    mentioned_predicates,
    resolve_inclusions,
    well_formed,
)
from .shexc import ShexDocument, ShexError, parse_shex_document, parse_shexc, serialize_shexc
from .terms import BNode, Iri, Literal, RdfTerm, Triple
from .turtle import TurtleError, parse_turtle, serialize_turtle

__version__ = "0.1.0"
