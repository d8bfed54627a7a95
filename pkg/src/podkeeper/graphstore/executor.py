"""Executes parsed statements against a :class:`Graph`.

MATCH returns every binding of the patterns (relationships within one
match are distinct) that satisfies WHERE, ordered by the tuple of bound
node/relationship ids in pattern order.  WHERE uses three-valued logic:
comparisons involving null or values of different kinds yield null, and
only bindings where the predicate is exactly true survive.

MERGE of a path merges each node pattern on its own (labels plus all given
properties, lowest id wins) and then each relationship on (type, endpoints,
properties).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from podkeeper.cypher import ast, parse
from podkeeper.cypher.render import render_expr
from podkeeper.errors import DeleteWithRelationships, ExecError, WriteInReadOnlyMode
from podkeeper.graphstore.graph import Graph, Node, Rel

READ_ONLY = "read-only"
READ_WRITE = "read-write"
MODES = (READ_ONLY, READ_WRITE)


@dataclass(frozen=True)
class NodeRef:
    id: int
    labels: tuple
    properties: tuple

    @classmethod
    def of(cls, node: Node) -> "NodeRef":
        return cls(node.id, tuple(sorted(node.labels)), tuple(node.properties.items()))

    def to_json(self) -> dict:
        return {"id": self.id, "labels": list(self.labels), "properties": dict(self.properties)}


@dataclass(frozen=True)
class RelRef:
    id: int
    type: str
    start: int
    end: int
    properties: tuple

    @classmethod
    def of(cls, rel: Rel) -> "RelRef":
        return cls(rel.id, rel.type, rel.start, rel.end, tuple(rel.properties.items()))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "type": self.type,
            "start": self.start,
            "end": self.end,
            "properties": dict(self.properties),
        }


def value_to_json(value):
    if isinstance(value, (NodeRef, RelRef)):
        return value.to_json()
    return value


@dataclass
class QueryResult:
    columns: list
    rows: list = field(default_factory=list)
    counters: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "columns": list(self.columns),
            "rows": [[value_to_json(v) for v in row] for row in self.rows],
            "counters": dict(self.counters),
        }


def new_counters() -> dict:
    return {
        "nodes_created": 0,
        "nodes_deleted": 0,
        "rels_created": 0,
        "rels_deleted": 0,
        "properties_set": 0,
    }


# value semantics


def _kind(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, (int, float)):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, NodeRef):
        return "node"
    if isinstance(v, RelRef):
        return "rel"
    raise ExecError(f"unsupported value {v!r}")


def equals(a, b):
    """Cypher equality: None when either side is null."""
    ka, kb = _kind(a), _kind(b)
    if ka == "null" or kb == "null":
        return None
    if ka != kb:
        return False
    if ka in ("node", "rel"):
        return a.id == b.id
    return a == b


def compare(op: str, a, b):
    if op == "=":
        return equals(a, b)
    if op == "<>":
        eq = equals(a, b)
        return None if eq is None else not eq
    ka, kb = _kind(a), _kind(b)
    if ka != kb or ka not in ("bool", "number", "string"):
        return None
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    return a >= b


def _truth(v, what: str):
    if v is None or isinstance(v, bool):
        return v
    raise ExecError(f"{what} expects a boolean, got {type(v).__name__}")


class _Scope:
    """Variable bindings for one match row: name -> ("node" | "rel", id)."""

    def __init__(self, graph: Graph, env: dict):
        self.graph = graph
        self.env = env

    def entity(self, name: str):
        kind, ident = self.env[name]
        if kind == "node":
            return self.graph.nodes[ident]
        return self.graph.rels[ident]

    def value(self, expr):
        if isinstance(expr, ast.Literal):
            return expr.value
        if isinstance(expr, ast.Var):
            kind, ident = self.env[expr.name]
            if kind == "node":
                return NodeRef.of(self.graph.nodes[ident])
            return RelRef.of(self.graph.rels[ident])
        if isinstance(expr, ast.PropertyRef):
            return self.entity(expr.variable).properties.get(expr.key)
        if isinstance(expr, ast.Comparison):
            return compare(expr.op, self.value(expr.left), self.value(expr.right))
        if isinstance(expr, ast.Not):
            v = _truth(self.value(expr.operand), "NOT")
            return None if v is None else not v
        if isinstance(expr, ast.And):
            left = _truth(self.value(expr.left), "AND")
            right = _truth(self.value(expr.right), "AND")
            if left is False or right is False:
                return False
            if left is None or right is None:
                return None
            return True
        if isinstance(expr, ast.Or):
            left = _truth(self.value(expr.left), "OR")
            right = _truth(self.value(expr.right), "OR")
            if left is True or right is True:
                return True
            if left is None or right is None:
                return None
            return False
        raise ExecError(f"cannot evaluate {expr!r}")


# pattern matching


def _props_match(entity_props: dict, wanted) -> bool:
    for key, lit in wanted:
        if equals(entity_props.get(key), lit.value) is not True:
            return False
    return True


def _node_ok(node: Node, pattern: ast.NodePattern) -> bool:
    return all(label in node.labels for label in pattern.labels) and _props_match(node.properties, pattern.properties)


def _rel_ok(rel: Rel, pattern: ast.RelPattern) -> bool:
    if pattern.rel_type is not None and rel.type != pattern.rel_type:
        return False
    return _props_match(rel.properties, pattern.properties)


def match_patterns(graph: Graph, patterns) -> list:
    """All bindings for ``patterns`` as ``(slot_ids, env)`` pairs, sorted by slot ids."""
    steps = []
    for path in patterns:
        steps.append(("start", path.nodes[0]))
        for left, rel, right in path.segments():
            steps.append(("rel", rel, right))
    results = []

    def bind_node(pattern, node_id, env):
        var = pattern.variable
        if var is None:
            return env
        seen = env.get(var)
        if seen is not None:
            return env if seen == ("node", node_id) else None
        new = dict(env)
        new[var] = ("node", node_id)
        return new

    def walk(k, current, slots, env, used):
        if k == len(steps):
            results.append((tuple(slots), env))
            return
        step = steps[k]
        if step[0] == "start":
            pattern = step[1]
            bound = env.get(pattern.variable) if pattern.variable else None
            candidates = [bound[1]] if bound else graph.nodes_with_labels(pattern.labels)
            for node_id in candidates:
                if not _node_ok(graph.nodes[node_id], pattern):
                    continue
                env2 = bind_node(pattern, node_id, env)
                if env2 is not None:
                    walk(k + 1, node_id, slots + [node_id], env2, used)
            return
        _, rel_pat, node_pat = step
        if rel_pat.direction == "->":
            pairs = [(r, r.end) for r in graph.outgoing(current)]
        else:
            pairs = [(r, r.start) for r in graph.incoming(current)]
        for rel, other in pairs:
            if rel.id in used or not _rel_ok(rel, rel_pat):
                continue
            if not _node_ok(graph.nodes[other], node_pat):
                continue
            env2 = bind_node(node_pat, other, env)
            if env2 is None:
                continue
            if rel_pat.variable is not None:
                env2 = dict(env2)
                env2[rel_pat.variable] = ("rel", rel.id)
            walk(k + 1, other, slots + [rel.id, other], env2, used | {rel.id})

    walk(0, None, [], {}, frozenset())
    results.sort(key=lambda item: item[0])
    return results


def _filtered(graph: Graph, clause: ast.MatchClause) -> list:
    rows = []
    for slots, env in match_patterns(graph, clause.patterns):
        if clause.where is not None:
            verdict = _truth(_Scope(graph, env).value(clause.where), "WHERE")
            if verdict is not True:
                continue
        rows.append(env)
    return rows


# statement execution


def execute(graph: Graph, stmt, mode: str = READ_WRITE, resolver: Callable | None = None) -> QueryResult:
    """Run ``stmt`` (an AST or query text) and return its result."""
    if isinstance(stmt, str):
        stmt = parse(stmt)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if ast.is_write(stmt) and mode == READ_ONLY:
        raise WriteInReadOnlyMode("statement writes to the graph but the session is read-only")
    if isinstance(stmt, ast.MatchStmt):
        return _run_match(graph, stmt)
    if isinstance(stmt, ast.LoadCsvStmt):
        from podkeeper.graphstore.csvload import load_csv

        report = load_csv(graph, stmt, resolver)
        return QueryResult([], [], report.to_counters())
    counters = new_counters()
    if isinstance(stmt, ast.CreateStmt):
        Writer(graph, counters).create(stmt, {})
    elif isinstance(stmt, ast.MergeStmt):
        Writer(graph, counters).merge(stmt, {})
    elif isinstance(stmt, ast.DeleteStmt):
        _run_delete(graph, stmt, counters)
    elif isinstance(stmt, ast.SetStmt):
        _run_set(graph, stmt, counters)
    else:
        raise ExecError(f"unsupported statement {type(stmt).__name__}")
    return QueryResult([], [], counters)


def _run_match(graph: Graph, stmt: ast.MatchStmt) -> QueryResult:
    envs = _filtered(graph, stmt.match)
    columns = [render_expr(item) for item in stmt.returns]
    aggregates = [isinstance(item, ast.Count) for item in stmt.returns]
    if not any(aggregates):
        rows = [tuple(_Scope(graph, env).value(item) for item in stmt.returns) for env in envs]
    else:
        groups: dict = {}
        for env in envs:
            scope = _Scope(graph, env)
            values = tuple(scope.value(item) for item, agg in zip(stmt.returns, aggregates) if not agg)
            # tag with kind so True and 1 stay in separate groups
            key = tuple((_kind(v), v) for v in values)
            counts = groups.setdefault(key, [0] * len(stmt.returns))
            for i, item in enumerate(stmt.returns):
                if aggregates[i] and (item.argument is None or scope.value(item.argument) is not None):
                    counts[i] += 1
        if not groups and all(aggregates):
            groups[()] = [0] * len(stmt.returns)
        rows = []
        for key, counts in groups.items():
            keys = (v for _, v in key)
            rows.append(tuple(counts[i] if aggregates[i] else next(keys) for i in range(len(aggregates))))
    if stmt.limit is not None:
        rows = rows[: stmt.limit]
    return QueryResult(columns, rows, {})


def _run_delete(graph: Graph, stmt: ast.DeleteStmt, counters: dict) -> None:
    node_ids, rel_ids = set(), set()
    for env in _filtered(graph, stmt.match):
        for name in stmt.targets:
            kind, ident = env[name]
            (node_ids if kind == "node" else rel_ids).add(ident)
    if not stmt.detach:
        for node_id in sorted(node_ids):
            dangling = [r for r in graph.attached_rels(node_id) if r not in rel_ids]
            if dangling:
                raise DeleteWithRelationships(
                    f"node {node_id} still has {len(dangling)} relationship(s); use DETACH DELETE"
                )
    for rel_id in sorted(rel_ids):
        graph.delete_rel(rel_id)
        counters["rels_deleted"] += 1
    for node_id in sorted(node_ids):
        counters["rels_deleted"] += graph.delete_node(node_id, detach=True)
        counters["nodes_deleted"] += 1


def _run_set(graph: Graph, stmt: ast.SetStmt, counters: dict) -> None:
    updates = []
    for env in _filtered(graph, stmt.match):
        scope = _Scope(graph, env)
        for item in stmt.assignments:
            value = scope.value(item.value)
            if isinstance(value, (NodeRef, RelRef)):
                raise ExecError("property values must be literals, not nodes or relationships")
            updates.append((scope.entity(item.variable), item.key, value))
    for entity, key, value in updates:
        if value is None:
            entity.properties.pop(key, None)
        else:
            entity.properties[key] = value
        counters["properties_set"] += 1


class Writer:
    """Applies CREATE and MERGE clauses, resolving row references via ``row``."""

    def __init__(self, graph: Graph, counters: dict, row: dict | None = None, row_var: str | None = None):
        self.graph = graph
        self.counters = counters
        self.row = row or {}
        self.row_var = row_var
        self.nodes_matched = 0

    def _props(self, pairs) -> dict:
        out = {}
        for key, value in pairs:
            if isinstance(value, ast.RowRef):
                out[key] = self.row[value.column]
            else:
                out[key] = value.value
        return out

    def create(self, stmt: ast.CreateStmt, env: dict) -> dict:
        for path in stmt.patterns:
            ids = [self._create_node(n, env) for n in path.nodes]
            for i, rel in enumerate(path.rels):
                start, end = (ids[i], ids[i + 1]) if rel.direction == "->" else (ids[i + 1], ids[i])
                created = self.graph.add_rel(rel.rel_type, start, end, self._props(rel.properties))
                self.counters["rels_created"] += 1
                self.counters["properties_set"] += len(created.properties)
                if rel.variable:
                    env[rel.variable] = ("rel", created.id)
        return env

    def _create_node(self, pattern: ast.NodePattern, env: dict) -> int:
        if pattern.variable and pattern.variable in env:
            return env[pattern.variable][1]
        node = self.graph.add_node(pattern.labels, self._props(pattern.properties))
        self.counters["nodes_created"] += 1
        self.counters["properties_set"] += len(node.properties)
        if pattern.variable:
            env[pattern.variable] = ("node", node.id)
        return node.id

    def merge(self, stmt: ast.MergeStmt, env: dict) -> dict:
        path = stmt.pattern
        for element in path.nodes + path.rels:
            self._reject_nulls(self._props(element.properties))
        ids = [self._merge_node(n, env) for n in path.nodes]
        for i, rel in enumerate(path.rels):
            start, end = (ids[i], ids[i + 1]) if rel.direction == "->" else (ids[i + 1], ids[i])
            props = self._props(rel.properties)
            found = None
            for candidate in self.graph.outgoing(start):
                if candidate.end == end and candidate.type == rel.rel_type and _dict_match(candidate.properties, props):
                    found = candidate
                    break
            if found is None:
                found = self.graph.add_rel(rel.rel_type, start, end, props)
                self.counters["rels_created"] += 1
                self.counters["properties_set"] += len(found.properties)
            if rel.variable:
                env[rel.variable] = ("rel", found.id)
        return env

    def _merge_node(self, pattern: ast.NodePattern, env: dict) -> int:
        if pattern.variable and pattern.variable in env:
            return env[pattern.variable][1]
        props = self._props(pattern.properties)
        for node_id in self.graph.nodes_with_labels(pattern.labels):
            if _dict_match(self.graph.nodes[node_id].properties, props):
                self.nodes_matched += 1
                break
        else:
            node = self.graph.add_node(pattern.labels, props)
            node_id = node.id
            self.counters["nodes_created"] += 1
            self.counters["properties_set"] += len(node.properties)
        if pattern.variable:
            env[pattern.variable] = ("node", node_id)
        return node_id

    @staticmethod
    def _reject_nulls(props: dict) -> None:
        for key, value in props.items():
            if value is None:
                raise ExecError(f"cannot MERGE on a null value for property {key!r}")


def _dict_match(have: dict, wanted: dict) -> bool:
    return all(equals(have.get(k), v) is True for k, v in wanted.items())
