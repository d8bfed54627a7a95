import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import check_fuzz_case, fuzz_input, load_corpus, position_ok
from podkeeper.cypher import CypherError, LexError, ParseError, UnboundVariable, ast, parse, render, tokenize
from podkeeper.cypher.parser import MAX_NESTING, MAX_PATTERN_ELEMENTS

CORPUS = load_corpus()


def kinds(text):
    return [repr(t) for t in tokenize(text)]


def test_tokenize_minimal():
    assert kinds("MATCH (n) RETURN n") == ["MATCH", "LPAREN", "IDENT(n)", "RPAREN", "RETURN", "IDENT(n)"]


def test_keywords_case_insensitive():
    tok = tokenize("merge (p:Person)")[0]
    assert tok.kind == "KEYWORD" and tok.value == "MERGE"


def test_token_positions():
    toks = tokenize("MATCH (n)\n  RETURN n")
    ret = toks[4]
    assert (ret.value, ret.line, ret.column) == ("RETURN", 2, 3)


@pytest.mark.parametrize(
    "text,line,column",
    [("'unterminated", 1, 1), ("MATCH (n) RETURN #", 1, 18), ("MATCH (n)\nWHERE n.a = 'x", 2, 13)],
)
def test_lex_errors(text, line, column):
    with pytest.raises(LexError) as err:
        tokenize(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_string_escapes():
    [tok] = tokenize(r"'it\'s \\ a\ttab'")
    assert tok.value == "it's \\ a\ttab"


def test_integer_overflow_is_lex_error():
    with pytest.raises(LexError):
        tokenize("99999999999999999999")


def test_parse_load_csv():
    stmt = parse("LOAD CSV WITH HEADERS FROM 'file:///people.csv' AS row MERGE (p:Person {name: row.name})")
    assert stmt == ast.LoadCsvStmt(
        "file:///people.csv",
        "row",
        (ast.MergeStmt(ast.PathPattern((ast.NodePattern("p", ("Person",), (("name", ast.RowRef("row", "name")),)),))),),
    )


def test_parse_relationship_match():
    stmt = parse("MATCH (a)-[r:CONNECTS]->(b) RETURN a, b")
    assert isinstance(stmt, ast.MatchStmt)
    [path] = stmt.patterns
    assert path.rels == (ast.RelPattern("r", "CONNECTS", "->", ()),)
    assert stmt.returns == (ast.Var("a"), ast.Var("b"))


def test_unbound_variable():
    with pytest.raises(UnboundVariable) as err:
        parse("MATCH (a) RETURN b")
    assert err.value.name == "b"
    assert err.value.column == 18


@pytest.mark.parametrize(
    "text",
    [
        "MATCH (n) WHERE m.x = 1 RETURN n",
        "MATCH (n) SET m.x = 1",
        "MATCH (n) DELETE m",
        "MATCH (n) RETURN row.name",
        "LOAD CSV WITH HEADERS FROM 'x' AS row MERGE (p {name: line.name})",
    ],
)
def test_binding_errors(text):
    with pytest.raises(UnboundVariable):
        parse(text)


def test_parse_error_carries_expected_set():
    with pytest.raises(ParseError) as err:
        parse("MATCH (n RETURN")
    assert err.value.column == 10
    assert set(err.value.expected) == {")", ":", "{"}
    assert not err.value.at_eof


def test_incomplete_statement_is_flagged_at_eof():
    with pytest.raises(ParseError) as err:
        parse("MATCH (n)\nWHERE n.a = 1")
    assert err.value.at_eof


@pytest.mark.parametrize(
    "text",
    [
        "MATCH (n) WHERE 1 < 2 < 3 RETURN n",
        "MATCH (n) RETURN n, n",
        "CREATE (a)-[r:X]->(b)-[r:X]->(c)",
        "CREATE (a)-[:X]-(b)",
        "CREATE (a)-->(b)",
        "MATCH (n) RETURN n LIMIT -1",
        "MATCH (n) RETURN n;;",
        "",
    ],
)
def test_rejected(text):
    with pytest.raises(CypherError):
        parse(text)


def test_render_canonical():
    assert render(parse("match (n) return n")) == "MATCH (n) RETURN n"
    assert render(parse("create (a:X {b: 1, a: 'z'})")) == "CREATE (a:X {b: 1, a: 'z'})"


def test_render_keeps_needed_parentheses():
    stmt = parse("MATCH (n) WHERE (n.a = 1 OR n.b = 2) AND NOT (n.c = 3 AND n.d = 4) RETURN n")
    assert render(stmt) == "MATCH (n) WHERE (n.a = 1 OR n.b = 2) AND NOT (n.c = 3 AND n.d = 4) RETURN n"


@pytest.mark.parametrize("value", [0, -1, 2**63 - 1, -(2**63), 0.1, 1e-300, 2.5e300, -0.5, 1e16])
def test_numeric_literals_roundtrip(value):
    stmt = parse(f"CREATE (n {{v: {value!r}}})")
    lit = stmt.patterns[0].nodes[0].properties[0][1]
    assert lit.value == value and type(lit.value) is type(value)
    assert parse(render(stmt)) == stmt


def test_literal_equality_is_type_aware():
    assert ast.Literal(1) != ast.Literal(1.0)
    assert ast.Literal(True) != ast.Literal(1)


@pytest.mark.parametrize("statement", CORPUS)
def test_corpus_roundtrip(statement):
    stmt = parse(statement)
    assert parse(render(stmt)) == stmt
    assert render(parse(render(stmt))) == render(stmt)


def test_nesting_limit():
    ok = "MATCH (n) WHERE " + "NOT " * MAX_NESTING + "n.a = 1 RETURN n"
    assert parse(ok)
    for deep in [
        "MATCH (n) WHERE " + "NOT " * 10_000 + "n.a = 1 RETURN n",
        "MATCH (n) WHERE " + "(" * 10_000 + "n.a = 1" + ")" * 10_000 + " RETURN n",
        "MATCH (n) WHERE " + " AND ".join(["n.a = 1"] * 10_000) + " RETURN n",
    ]:
        with pytest.raises(ParseError):
            parse(deep)


def test_pattern_size_limit():
    assert parse("MATCH " + "-[]->".join(["()"] * (MAX_PATTERN_ELEMENTS // 2)) + " RETURN count(*)")
    with pytest.raises(ParseError):
        parse("MATCH " + ", ".join(f"(n{i})" for i in range(MAX_PATTERN_ELEMENTS + 1)) + " RETURN count(*)")


def test_seeded_fuzz():
    rng = random.Random(99)
    failures = [f for f in (check_fuzz_case(fuzz_input(rng, CORPUS)) for _ in range(5000)) if f]
    assert failures == []


@settings(max_examples=400, deadline=None)
@given(st.text(max_size=80))
def test_hypothesis_text_fuzz(text):
    assert check_fuzz_case(text) is None


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(["MATCH", "(", ")", "n", ":", "L", "-[", "]->", "{", "}", "a", ":", "1", ",",
                                 "RETURN", "WHERE", "=", "AND", "NOT", "'s'", "count", "*", "LIMIT", "DETACH",
                                 "DELETE", "SET", ".", "CREATE", "MERGE"]), max_size=20))
def test_hypothesis_token_fuzz(words):
    assert check_fuzz_case(" ".join(words)) is None


def test_error_positions_inside_input():
    for text in ["MATCH (", "MATCH (n)\n", "MATCH (n) RETURN n.", "x", "\n\n'", "CREATE (a)-[:X]->(b"]:
        with pytest.raises(CypherError) as err:
            parse(text)
        assert position_ok(text, err.value), (text, err.value.to_dict())
