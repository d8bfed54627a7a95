"""Interactive console for querying one pod.

Lines starting with ``:`` are meta-commands that expand into Cypher for
users who do not know the language; everything else is sent as Cypher.
Statements may span lines and end with ``;`` (optional on a single line).
"""

from __future__ import annotations

import csv
import re
import shlex
import sys
from pathlib import Path

from podkeeper.client.api import ApiError, ConnectionFailed, GatewayClient
from podkeeper.client.output import render_result, table
from podkeeper.cypher import ParseError, parse, render_string
from podkeeper.graphstore import Graph, export_dot

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

HELP = """\
meta-commands:
  :help                              show this help
  :use <pod>                         switch to another pod
  :pods                              list pods you can access
  :nodes                             list every node in the pod
  :add-node <Label> key=value ...    create a node unless an identical one exists
  :link <a> <REL> <b>                connect the nodes named a and b
  :load <csv> <Label> <keycol>       upload a CSV file, one node per distinct key
  :export-dot <path>                 write the graph as Graphviz dot
  :quit                              leave the console
anything else is sent as a Cypher statement; end multi-line statements with ';'"""


class UsageError(Exception):
    pass


def _name(text: str, what: str) -> str:
    if not NAME_RE.fullmatch(text):
        raise UsageError(f"invalid {what} {text!r}")
    return text


def expand_add_node(label: str, pairs: list[str]) -> str:
    props = []
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {pair!r}")
        props.append(f"{_name(key, 'property key')}: {render_string(value)}")
    body = f" {{{', '.join(props)}}}" if props else ""
    return f"MERGE (n:{_name(label, 'label')}{body})"


def expand_link(a: str, rel: str, b: str) -> str:
    return f"MERGE ({{name: {render_string(a)}}})-[:{_name(rel, 'relationship type')}]->({{name: {render_string(b)}}})"


def expand_load(upload_url: str, label: str, keycol: str) -> str:
    return (
        f"LOAD CSV WITH HEADERS FROM {render_string(upload_url)} AS row "
        f"MERGE (n:{_name(label, 'label')} {{{_name(keycol, 'column')}: row.{keycol}}})"
    )


NODES_QUERY = "MATCH (n) RETURN n"
RELS_QUERY = "MATCH ()-[r]->() RETURN r"


def graph_from_results(nodes: dict, rels: dict) -> Graph:
    """Rebuild a local graph (same ids) from ``NODES_QUERY``/``RELS_QUERY`` results."""
    g = Graph()
    for (node,) in nodes["rows"]:
        g.add_node(node["labels"], node["properties"], node_id=node["id"])
    for (rel,) in rels["rows"]:
        g.add_rel(rel["type"], rel["start"], rel["end"], rel["properties"], rel_id=rel["id"])
    return g


class Console:
    def __init__(self, client: GatewayClient, pod_id: str, out=None, stdin=None):
        self.client = client
        self.pod_id = pod_id
        self.out = out or sys.stdout
        self.stdin = stdin
        self.credentials: dict | None = None
        self.buffer: list[str] = []

    def say(self, text: str = "") -> None:
        print(text, file=self.out)

    # connection

    def use(self, pod_id: str) -> None:
        self.credentials = self.client.credentials(pod_id)["result"]
        self.pod_id = pod_id

    def query(self, statement: str) -> dict:
        try:
            return self.client.query(self.pod_id, statement, self.credentials)["result"]
        except ConnectionFailed:
            # one reconnect attempt: re-fetch credentials, then retry once
            self.use(self.pod_id)
            return self.client.query(self.pod_id, statement, self.credentials)["result"]

    def run_statement(self, statement: str) -> None:
        try:
            self.say(render_result(self.query(statement)))
        except ApiError as exc:
            where = f" (line {exc.position['line']}, column {exc.position['column']})" if exc.position else ""
            self.say(f"error: {exc.code}: {exc.message}{where}")

    # meta-commands

    def meta(self, line: str) -> int | None:
        try:
            words = shlex.split(line.rstrip(";"))
        except ValueError as exc:
            self.say(f"error: {exc}")
            return None
        cmd, args = words[0], words[1:]
        try:
            if cmd in (":quit", ":exit", ":q"):
                return 0
            if cmd == ":help":
                self.say(HELP)
            elif cmd == ":use":
                self._need(args, 1, ":use <pod>")
                self.use(args[0])
                self.say(f"using pod {args[0]}")
            elif cmd == ":pods":
                pods = self.client.list_pods()["result"]
                rows = [[p["pod_id"], p["state"], p["description"]] for p in pods]
                self.say(table(["pod_id", "state", "description"], rows))
            elif cmd == ":nodes":
                self.run_statement(NODES_QUERY)
            elif cmd == ":add-node":
                if not args:
                    raise UsageError("usage: :add-node <Label> key=value ...")
                self.run_statement(expand_add_node(args[0], args[1:]))
            elif cmd == ":link":
                self._need(args, 3, ":link <a> <REL> <b>")
                self.run_statement(expand_link(*args))
            elif cmd == ":load":
                self._need(args, 3, ":load <csv> <Label> <keycol>")
                self._load(*args)
            elif cmd == ":export-dot":
                self._need(args, 1, ":export-dot <path>")
                self.export_dot(args[0])
            else:
                self.say(f"error: unknown command {cmd}; try :help")
        except UsageError as exc:
            self.say(f"error: {exc}")
        except ApiError as exc:
            self.say(f"error: {exc.code}: {exc.message}")
        return None

    @staticmethod
    def _need(args, n, usage):
        if len(args) != n:
            raise UsageError(f"usage: {usage}")

    def _load(self, path: str, label: str, keycol: str) -> None:
        path = Path(path)
        try:
            with path.open(newline="", encoding="utf-8-sig") as fh:
                header = next(csv.reader(fh), [])
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        if keycol not in header:
            raise UsageError(f"column {keycol!r} not in {path.name} header {header}")
        uploaded = self.client.upload(self.pod_id, path)["result"]
        self.run_statement(expand_load(uploaded["upload_url"], label, keycol))

    def export_dot(self, path: str) -> str:
        graph = graph_from_results(self.query(NODES_QUERY), self.query(RELS_QUERY))
        Path(path).write_text(export_dot(graph))
        self.say(f"wrote {path} ({len(graph.nodes)} nodes, {len(graph.rels)} relationships)")
        return path

    # loop

    def feed(self, line: str) -> int | None:
        """Process one input line; returns an exit code when the console should stop."""
        stripped = line.strip()
        if not self.buffer:
            if not stripped or stripped.startswith("//"):
                return None
            if stripped.startswith(":"):
                return self.meta(stripped)
        self.buffer.append(line.rstrip("\n"))
        text = "\n".join(self.buffer).strip()
        if not text.endswith(";"):
            try:
                parse(text)
            except ParseError as exc:
                if exc.at_eof:
                    return None  # statement continues on the next line
            except Exception:
                pass
        self.buffer = []
        self.run_statement(text)
        return None

    def prompt(self) -> str:
        return "...> " if self.buffer else f"{self.pod_id}> "

    def lines(self):
        if self.stdin is not None:
            yield from self.stdin
            return
        try:
            import readline  # noqa: F401  (enables line editing and history for input())
        except ImportError:
            pass
        while True:
            try:
                yield input(self.prompt())
            except EOFError:
                return

    def loop(self) -> int:
        self.use(self.pod_id)
        self.say(f"connected to pod {self.pod_id}; :help for commands, :quit to leave")
        try:
            for line in self.lines():
                code = self.feed(line)
                if code is not None:
                    return code
            if self.buffer:
                text = "\n".join(self.buffer).strip()
                self.buffer = []
                self.run_statement(text)
        except ConnectionFailed as exc:
            self.say(str(exc))
            return 3
        return 0
