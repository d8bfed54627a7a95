"""Canonical text form of a parsed statement.

``parse(render(stmt)) == stmt`` holds for every statement ``parse`` can
return.  Keywords are upper-cased, property maps keep their written order.
"""

from __future__ import annotations

from podkeeper.cypher import ast

_ESCAPE = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\t": "\\t", "\r": "\\r"}

# binding strength; higher binds tighter
_PREC = {ast.Or: 1, ast.And: 2, ast.Not: 3, ast.Comparison: 4}


def render_string(value: str) -> str:
    return "'" + "".join(_ESCAPE.get(ch, ch) for ch in value) + "'"


def render_literal(lit: ast.Literal) -> str:
    v = lit.value
    if v is None:
        return "null"
    if v is True:
        return "true"
    if v is False:
        return "false"
    if isinstance(v, str):
        return render_string(v)
    return repr(v)


def render_value(value) -> str:
    if isinstance(value, ast.RowRef):
        return f"{value.row_var}.{value.column}"
    return render_literal(value)


def render_props(props) -> str:
    return "{" + ", ".join(f"{k}: {render_value(v)}" for k, v in props) + "}"


def render_node(node: ast.NodePattern) -> str:
    head = (node.variable or "") + "".join(f":{label}" for label in node.labels)
    if node.properties:
        head = f"{head} {render_props(node.properties)}" if head else render_props(node.properties)
    return f"({head})"


def render_rel(rel: ast.RelPattern) -> str:
    inner = (rel.variable or "") + (f":{rel.rel_type}" if rel.rel_type else "")
    if rel.properties:
        inner = f"{inner} {render_props(rel.properties)}" if inner else render_props(rel.properties)
    body = f"-[{inner}]-"
    return f"<{body}" if rel.direction == "<-" else f"{body}>"


def render_path(path: ast.PathPattern) -> str:
    parts = [render_node(path.nodes[0])]
    for rel, node in zip(path.rels, path.nodes[1:]):
        parts.append(render_rel(rel))
        parts.append(render_node(node))
    return "".join(parts)


def render_expr(expr, parent_prec: int = 0) -> str:
    if isinstance(expr, ast.Literal):
        return render_literal(expr)
    if isinstance(expr, ast.Var):
        return expr.name
    if isinstance(expr, ast.PropertyRef):
        return f"{expr.variable}.{expr.key}"
    if isinstance(expr, ast.Count):
        return f"count({'*' if expr.argument is None else render_expr(expr.argument)})"
    prec = _PREC[type(expr)]
    if isinstance(expr, ast.Comparison):
        # operands of a comparison must be atoms; wrap anything compound
        text = f"{render_expr(expr.left, prec + 1)} {expr.op} {render_expr(expr.right, prec + 1)}"
    elif isinstance(expr, ast.Not):
        text = f"NOT {render_expr(expr.operand, prec)}"
    elif isinstance(expr, ast.And):
        text = f"{render_expr(expr.left, prec)} AND {render_expr(expr.right, prec + 1)}"
    else:
        text = f"{render_expr(expr.left, prec)} OR {render_expr(expr.right, prec + 1)}"
    return f"({text})" if prec < parent_prec else text


def _match_part(clause: ast.MatchClause) -> str:
    text = "MATCH " + ", ".join(render_path(p) for p in clause.patterns)
    if clause.where is not None:
        text += " WHERE " + render_expr(clause.where)
    return text


def render(stmt: ast.Statement) -> str:
    if isinstance(stmt, ast.CreateStmt):
        return "CREATE " + ", ".join(render_path(p) for p in stmt.patterns)
    if isinstance(stmt, ast.MergeStmt):
        return "MERGE " + render_path(stmt.pattern)
    if isinstance(stmt, ast.MatchStmt):
        text = _match_part(stmt.match) + " RETURN " + ", ".join(render_expr(i) for i in stmt.returns)
        if stmt.limit is not None:
            text += f" LIMIT {stmt.limit}"
        return text
    if isinstance(stmt, ast.DeleteStmt):
        verb = "DETACH DELETE" if stmt.detach else "DELETE"
        return f"{_match_part(stmt.match)} {verb} {', '.join(stmt.targets)}"
    if isinstance(stmt, ast.SetStmt):
        items = ", ".join(f"{a.variable}.{a.key} = {render_expr(a.value)}" for a in stmt.assignments)
        return f"{_match_part(stmt.match)} SET {items}"
    if isinstance(stmt, ast.LoadCsvStmt):
        head = f"LOAD CSV WITH HEADERS FROM {render_string(stmt.source_url)} AS {stmt.row_var}"
        return " ".join([head] + [render(clause) for clause in stmt.body])
    raise TypeError(f"not a statement: {stmt!r}")
