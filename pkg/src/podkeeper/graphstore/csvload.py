"""``LOAD CSV WITH HEADERS`` execution.

The CSV dialect is the RFC 4180 subset: comma separated, double-quote
quoting, LF or CRLF line ends, first row is the header.  Every cell enters
the graph as a string.  The whole source is parsed and validated before the
graph is touched, so a malformed file leaves the graph unchanged.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable
from urllib.parse import unquote, urlparse

from podkeeper.cypher import ast
from podkeeper.errors import CsvMalformed, SourceUnavailable, UnknownColumn
from podkeeper.graphstore.executor import Writer, new_counters
from podkeeper.graphstore.graph import Graph

UPLOAD_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]{0,127}")

Resolver = Callable[[str], bytes]


@dataclass
class LoadReport:
    rows_read: int = 0
    nodes_created: int = 0
    rels_created: int = 0
    nodes_matched: int = 0
    properties_set: int = 0

    def to_counters(self) -> dict:
        counters = new_counters()
        counters.update(asdict(self))
        return counters


def make_resolver(upload_dir: str | Path | None = None, allow_file: bool = True) -> Resolver:
    """Resolve ``file://`` paths and ``upload://{name}`` files to bytes."""

    def resolve(url: str) -> bytes:
        parsed = urlparse(url)
        if parsed.scheme == "file" and allow_file:
            path = Path(unquote(parsed.netloc + parsed.path))
        elif parsed.scheme == "upload" and upload_dir is not None:
            name = parsed.netloc + parsed.path
            if not UPLOAD_NAME_RE.fullmatch(name) or ".." in name:
                raise SourceUnavailable(f"invalid upload name {name!r}")
            path = Path(upload_dir) / name
        else:
            raise SourceUnavailable(f"unsupported CSV source {url!r}")
        try:
            return path.read_bytes()
        except OSError:
            raise SourceUnavailable(f"cannot read CSV source {url!r}") from None

    return resolve


def read_rows(raw: bytes) -> tuple[list[str], list[tuple[int, list[str]]]]:
    """Split CSV bytes into a header and ``(line_number, cells)`` data rows."""
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        line = raw[: exc.start].count(b"\n") + 1
        raise CsvMalformed("source is not valid UTF-8", line) from None
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    header = None
    rows = []
    try:
        for cells in reader:
            if not cells:
                continue
            if header is None:
                header = cells
                if any(not h for h in header) or len(set(header)) != len(header):
                    raise CsvMalformed("header names must be non-empty and unique", reader.line_num)
                continue
            if len(cells) != len(header):
                raise CsvMalformed(f"expected {len(header)} fields, got {len(cells)}", reader.line_num)
            rows.append((reader.line_num, cells))
    except csv.Error as exc:
        raise CsvMalformed(str(exc), reader.line_num) from None
    if header is None:
        raise CsvMalformed("source has no header row", 1)
    return header, rows


def _row_refs(stmt: ast.LoadCsvStmt):
    for clause in stmt.body:
        paths = clause.patterns if isinstance(clause, ast.CreateStmt) else (clause.pattern,)
        for path in paths:
            for element in path.nodes + path.rels:
                for _, value in element.properties:
                    if isinstance(value, ast.RowRef):
                        yield value


def load_csv(graph: Graph, stmt: ast.LoadCsvStmt, resolver: Resolver | None) -> LoadReport:
    if resolver is None:
        resolver = make_resolver()
    header, rows = read_rows(resolver(stmt.source_url))
    columns = set(header)
    for ref in _row_refs(stmt):
        if ref.column not in columns:
            raise UnknownColumn(ref.column)
    counters = new_counters()
    report = LoadReport(rows_read=len(rows))
    for _, cells in rows:
        writer = Writer(graph, counters, dict(zip(header, cells)), stmt.row_var)
        env: dict = {}
        for clause in stmt.body:
            if isinstance(clause, ast.MergeStmt):
                writer.merge(clause, env)
            else:
                writer.create(clause, env)
        report.nodes_matched += writer.nodes_matched
    report.nodes_created = counters["nodes_created"]
    report.rels_created = counters["rels_created"]
    report.properties_set = counters["properties_set"]
    return report
