"""Cypher-subset query language: parsing and evaluation."""

from skygraph.query.syntax import (
    BoolExpr,
    HopRange,
    NodeComparison,
    NodePattern,
    PropertyComparison,
    QueryAst,
    RelPattern,
    parse_query,
)
from skygraph.query.engine import MatchResult, evaluate, explain

__all__ = [
    "BoolExpr",
    "HopRange",
    "MatchResult",
    "NodeComparison",
    "NodePattern",
    "PropertyComparison",
    "QueryAst",
    "RelPattern",
    "evaluate",
    "explain",
    "parse_query",
]
