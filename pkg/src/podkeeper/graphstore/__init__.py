"""Property-graph engine: one instance backs each pod."""

from podkeeper.graphstore.csvload import LoadReport, load_csv, make_resolver, read_rows
from podkeeper.graphstore.executor import (
    READ_ONLY,
    READ_WRITE,
    NodeRef,
    QueryResult,
    RelRef,
    execute,
    match_patterns,
)
from podkeeper.graphstore.graph import Graph, Node, Rel, export_dot, load_snapshot, save_snapshot

__all__ = [
    "Graph",
    "LoadReport",
    "Node",
    "NodeRef",
    "QueryResult",
    "READ_ONLY",
    "READ_WRITE",
    "Rel",
    "RelRef",
    "execute",
    "export_dot",
    "load_csv",
    "load_snapshot",
    "make_resolver",
    "match_patterns",
    "read_rows",
    "save_snapshot",
]
