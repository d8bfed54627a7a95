from __future__ import annotations

from podkeeper.cypher import render_string

_COUNTER_WORDS = [
    ("nodes_created", "node", "created"),
    ("nodes_deleted", "node", "deleted"),
    ("rels_created", "relationship", "created"),
    ("rels_deleted", "relationship", "deleted"),
    ("properties_set", "property", "set"),
]
_PLURAL = {"node": "nodes", "relationship": "relationships", "property": "properties"}


def format_value(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, dict) and "labels" in value:
        labels = "".join(f":{label}" for label in value["labels"])
        props = _format_props(value.get("properties", {}))
        return f"(#{value['id']}{labels}{props})"
    if isinstance(value, dict) and "type" in value:
        props = _format_props(value.get("properties", {}))
        return f"[#{value['id']}:{value['type']}{props} {value['start']}->{value['end']}]"
    return str(value)


def _format_props(props: dict) -> str:
    if not props:
        return ""
    inner = ", ".join(f"{k}: {render_string(v) if isinstance(v, str) else format_value(v)}" for k, v in props.items())
    return " {" + inner + "}"


def table(columns: list[str], rows: list[list]) -> str:
    cells = [[format_value(v) for v in row] for row in rows]
    widths = [len(c) for c in columns]
    for row in cells:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    def line(values):
        return " | ".join(v.ljust(w) for v, w in zip(values, widths)).rstrip()
    out = [line(columns), "-+-".join("-" * w for w in widths)]
    out.extend(line(row) for row in cells)
    return "\n".join(out)


def describe_counters(counters: dict) -> str:
    parts = []
    if "rows_read" in counters:
        parts.append(f"{counters['rows_read']} rows read")
    for key, noun, verb in _COUNTER_WORDS:
        n = counters.get(key, 0)
        if n:
            parts.append(f"{n} {noun if n == 1 else _PLURAL[noun]} {verb}")
    if counters.get("nodes_matched"):
        parts.append(f"{counters['nodes_matched']} nodes matched")
    return ", ".join(parts) if parts else "no changes"


def render_result(result: dict) -> str:
    if result["columns"]:
        n = len(result["rows"])
        return f"{table(result['columns'], result['rows'])}\n({n} row{'s' if n != 1 else ''})"
    return describe_counters(result.get("counters", {}))
