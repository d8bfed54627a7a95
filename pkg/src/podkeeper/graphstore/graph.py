"""In-memory property graph with snapshot persistence and dot export.

Snapshot schema (``format_version`` 1), written with sorted keys so equal
graphs produce byte-identical files::

    {"format_version": 1, "next_node_id": int, "next_rel_id": int,
     "nodes": [{"id": int, "labels": [str], "properties": {...}}],
     "relationships": [{"id": int, "type": str, "start": int, "end": int,
                        "properties": {...}}]}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from podkeeper.errors import (
    DeleteWithRelationships,
    ExecError,
    SnapshotCorrupt,
    SnapshotError,
    SnapshotVersionUnsupported,
)

SNAPSHOT_VERSION = 1
SCALAR_TYPES = (str, int, float, bool)


@dataclass
class Node:
    id: int
    labels: set = field(default_factory=set)
    properties: dict = field(default_factory=dict)


@dataclass
class Rel:
    id: int
    type: str
    start: int
    end: int
    properties: dict = field(default_factory=dict)


class Graph:
    def __init__(self):
        self.nodes: dict[int, Node] = {}
        self.rels: dict[int, Rel] = {}
        self.next_node_id = 0
        self.next_rel_id = 0
        self._out: dict[int, set[int]] = {}
        self._in: dict[int, set[int]] = {}
        self._by_label: dict[str, set[int]] = {}

    def __len__(self):
        return len(self.nodes)

    # mutation

    def add_node(self, labels=(), properties=None, node_id: int | None = None) -> Node:
        if node_id is None:
            node_id = self.next_node_id
        elif node_id in self.nodes:
            raise ExecError(f"node id {node_id} already in use")
        node = Node(node_id, set(labels), _clean_props(properties))
        self.nodes[node_id] = node
        self.next_node_id = max(self.next_node_id, node_id + 1)
        self._out[node_id] = set()
        self._in[node_id] = set()
        for label in node.labels:
            self._by_label.setdefault(label, set()).add(node_id)
        return node

    def add_rel(self, rel_type: str, start: int, end: int, properties=None, rel_id: int | None = None) -> Rel:
        if start not in self.nodes or end not in self.nodes:
            raise ExecError("relationship endpoints must be live nodes")
        if rel_id is None:
            rel_id = self.next_rel_id
        elif rel_id in self.rels:
            raise ExecError(f"relationship id {rel_id} already in use")
        rel = Rel(rel_id, rel_type, start, end, _clean_props(properties))
        self.rels[rel_id] = rel
        self.next_rel_id = max(self.next_rel_id, rel_id + 1)
        self._out[start].add(rel_id)
        self._in[end].add(rel_id)
        return rel

    def delete_rel(self, rel_id: int) -> None:
        rel = self.rels.pop(rel_id)
        self._out[rel.start].discard(rel_id)
        self._in[rel.end].discard(rel_id)

    def delete_node(self, node_id: int, detach: bool = False) -> int:
        """Remove a node; returns how many relationships went with it."""
        attached = self.attached_rels(node_id)
        if attached and not detach:
            raise DeleteWithRelationships(
                f"node {node_id} still has {len(attached)} relationship(s); use DETACH DELETE"
            )
        for rel_id in attached:
            self.delete_rel(rel_id)
        node = self.nodes.pop(node_id)
        for label in node.labels:
            self._by_label[label].discard(node_id)
        del self._out[node_id]
        del self._in[node_id]
        return len(attached)

    # lookup

    def attached_rels(self, node_id: int) -> list[int]:
        return sorted(self._out[node_id] | self._in[node_id])

    def outgoing(self, node_id: int) -> list[Rel]:
        return [self.rels[r] for r in sorted(self._out[node_id])]

    def incoming(self, node_id: int) -> list[Rel]:
        return [self.rels[r] for r in sorted(self._in[node_id])]

    def nodes_with_labels(self, labels) -> list[int]:
        if not labels:
            return sorted(self.nodes)
        sets = [self._by_label.get(label, set()) for label in labels]
        smallest = min(sets, key=len)
        return sorted(n for n in smallest if all(n in s for s in sets))

    # persistence

    def to_dict(self) -> dict:
        return {
            "format_version": SNAPSHOT_VERSION,
            "next_node_id": self.next_node_id,
            "next_rel_id": self.next_rel_id,
            "nodes": [
                {"id": n.id, "labels": sorted(n.labels), "properties": n.properties}
                for _, n in sorted(self.nodes.items())
            ],
            "relationships": [
                {"id": r.id, "type": r.type, "start": r.start, "end": r.end, "properties": r.properties}
                for _, r in sorted(self.rels.items())
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        if not isinstance(data, dict) or "format_version" not in data:
            raise SnapshotCorrupt("snapshot is not a graph document")
        if data["format_version"] != SNAPSHOT_VERSION:
            raise SnapshotVersionUnsupported(f"snapshot format_version {data['format_version']!r} is not supported")
        g = cls()
        try:
            for n in data["nodes"]:
                if not isinstance(n["labels"], list) or not all(isinstance(x, str) for x in n["labels"]):
                    raise ValueError("labels must be a list of strings")
                g.add_node(n["labels"], n["properties"], node_id=_int(n["id"]))
            for r in data["relationships"]:
                g.add_rel(r["type"], _int(r["start"]), _int(r["end"]), r["properties"], rel_id=_int(r["id"]))
            next_node, next_rel = _int(data["next_node_id"]), _int(data["next_rel_id"])
        except (KeyError, TypeError, ValueError, AttributeError, ExecError) as exc:
            raise SnapshotCorrupt(f"snapshot is inconsistent: {exc}") from None
        if next_node < g.next_node_id or next_rel < g.next_rel_id:
            raise SnapshotCorrupt("snapshot id counters are behind existing ids")
        g.next_node_id, g.next_rel_id = next_node, next_rel
        return g

    @classmethod
    def loads(cls, text: str) -> "Graph":
        try:
            data = json.loads(text)
        except ValueError as exc:
            raise SnapshotCorrupt(f"snapshot is not valid JSON: {exc}") from None
        return cls.from_dict(data)


def _int(value) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValueError(f"expected integer id, got {value!r}")
    return value


def _clean_props(properties) -> dict:
    out = {}
    for key, value in (properties or {}).items():
        if value is None:
            continue
        if not isinstance(key, str) or not isinstance(value, SCALAR_TYPES):
            raise ExecError(f"unsupported property {key!r}={value!r}")
        out[key] = value
    return out


def save_snapshot(graph: Graph, path: str | os.PathLike) -> int:
    """Atomically write ``graph`` to ``path``; returns bytes written."""
    path = Path(path)
    data = graph.dumps().encode("utf-8")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot: {exc}") from exc
    return len(data)


def load_snapshot(path: str | os.PathLike) -> Graph:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise SnapshotCorrupt("snapshot is not UTF-8") from None
    return Graph.loads(text)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def node_caption(node: Node) -> str:
    name = node.properties.get("name", node.id)
    return ":".join(sorted(node.labels) + [str(name)])


def export_dot(graph: Graph) -> str:
    if not graph.nodes:
        return "digraph g { }"
    lines = ["digraph g {"]
    for node_id, node in sorted(graph.nodes.items()):
        lines.append(f"  n{node_id} [label={_dot_quote(node_caption(node))}];")
    for _, rel in sorted(graph.rels.items()):
        lines.append(f"  n{rel.start} -> n{rel.end} [label={_dot_quote(rel.type)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
