"""Typed AST for the supported Cypher subset.

Nodes are frozen dataclasses so parsed statements can be compared and
hashed.  Property maps are kept as tuples of ``(key, value)`` pairs to
preserve the order in which they were written.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True, eq=False)
class Literal:
    value: "str | int | float | bool | None"

    # 1 == 1.0 == True in Python; literals of different kinds must not compare equal.
    def _key(self):
        return (type(self.value).__name__, self.value)

    def __eq__(self, other):
        return isinstance(other, Literal) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Literal({self.value!r})"


@dataclass(frozen=True)
class RowRef:
    row_var: str
    column: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class PropertyRef:
    variable: str
    key: str


@dataclass(frozen=True)
class Count:
    argument: "Var | PropertyRef | None"  # None means count(*)


@dataclass(frozen=True)
class Comparison:
    op: str  # one of = <> < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


Expr = Union[Literal, Var, PropertyRef, Comparison, Not, And, Or]
PropValue = Union[Literal, RowRef]
Props = tuple  # tuple[tuple[str, PropValue], ...]

COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")


@dataclass(frozen=True)
class NodePattern:
    variable: "str | None" = None
    labels: tuple = ()
    properties: Props = ()

    @property
    def props(self) -> dict:
        return dict(self.properties)


@dataclass(frozen=True)
class RelPattern:
    variable: "str | None" = None
    rel_type: "str | None" = None
    direction: str = "->"  # "->" left-to-right, "<-" right-to-left
    properties: Props = ()

    @property
    def props(self) -> dict:
        return dict(self.properties)


@dataclass(frozen=True)
class PathPattern:
    nodes: tuple  # tuple[NodePattern, ...]
    rels: tuple = ()  # tuple[RelPattern, ...], len(nodes) - 1 entries

    def __post_init__(self):
        if len(self.nodes) != len(self.rels) + 1:
            raise ValueError("a path needs exactly one more node than relationships")

    def segments(self):
        """Yield ``(left_node, rel, right_node)`` triples along the path."""
        for i, rel in enumerate(self.rels):
            yield self.nodes[i], rel, self.nodes[i + 1]


@dataclass(frozen=True)
class MatchClause:
    patterns: tuple
    where: "Expr | None" = None


@dataclass(frozen=True)
class SetItem:
    variable: str
    key: str
    value: "Expr"


@dataclass(frozen=True)
class CreateStmt:
    patterns: tuple


@dataclass(frozen=True)
class MergeStmt:
    pattern: PathPattern


@dataclass(frozen=True)
class MatchStmt:
    patterns: tuple
    where: "Expr | None"
    returns: tuple  # tuple[Var | PropertyRef | Count, ...]
    limit: "int | None" = None

    @property
    def match(self) -> MatchClause:
        return MatchClause(self.patterns, self.where)


@dataclass(frozen=True)
class DeleteStmt:
    match: MatchClause
    detach: bool
    targets: tuple  # tuple[str, ...]


@dataclass(frozen=True)
class SetStmt:
    match: MatchClause
    assignments: tuple  # tuple[SetItem, ...]


@dataclass(frozen=True)
class LoadCsvStmt:
    source_url: str
    row_var: str
    body: tuple  # tuple[MergeStmt | CreateStmt, ...]


Statement = Union[CreateStmt, MergeStmt, MatchStmt, DeleteStmt, SetStmt, LoadCsvStmt]
WRITE_STATEMENTS = (CreateStmt, MergeStmt, DeleteStmt, SetStmt, LoadCsvStmt)


def is_write(stmt: Statement) -> bool:
    return isinstance(stmt, WRITE_STATEMENTS)
