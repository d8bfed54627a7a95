"""Populate a pod with the bundled architecture knowledge graph.

Nodes are bulk-loaded with LOAD CSV; relationships are read from a second
CSV on the client and merged one statement per row.
"""

from __future__ import annotations

import csv
import io
from importlib import resources
from pathlib import Path

from podkeeper.client.api import ApiError, GatewayClient
from podkeeper.client.console import NODES_QUERY, RELS_QUERY, graph_from_results
from podkeeper.cypher import render_string
from podkeeper.graphstore import export_dot

NODES_FILE = "architecture_nodes.csv"
RELS_FILE = "architecture_rels.csv"

NODE_LOAD = (
    "LOAD CSV WITH HEADERS FROM 'upload://" + NODES_FILE + "' AS row "
    "MERGE (c:Component {name: row.name, kind: row.kind, description: row.description})"
)


def fixture_path(name: str) -> Path:
    return Path(str(resources.files("podkeeper.fixtures").joinpath(name)))


def relationship_statements() -> list[str]:
    text = fixture_path(RELS_FILE).read_text(encoding="utf-8")
    return [
        f"MERGE (a:Component {{name: {render_string(r['source'])}}})"
        f"-[:{r['type']}]->(b:Component {{name: {render_string(r['target'])}}})"
        for r in csv.DictReader(io.StringIO(text))
    ]


def demo_arch(client: GatewayClient, pod_id: str = "archkg", dot_path: str | Path = "architecture.dot") -> dict:
    try:
        client.get_pod(pod_id)
    except ApiError as exc:
        if exc.code != "POD_NOT_FOUND":
            raise
        client.create_pod(pod_id, "neo4j", "architecture knowledge graph")
    creds = client.credentials(pod_id)["result"]
    client.upload(pod_id, fixture_path(NODES_FILE))
    client.query(pod_id, NODE_LOAD, creds)
    for statement in relationship_statements():
        client.query(pod_id, statement, creds)
    nodes = client.query(pod_id, NODES_QUERY, creds)["result"]
    rels = client.query(pod_id, RELS_QUERY, creds)["result"]
    Path(dot_path).write_text(export_dot(graph_from_results(nodes, rels)))
    return {"pod_id": pod_id, "nodes": len(nodes["rows"]), "relationships": len(rels["rows"]), "dot_path": str(dot_path)}
