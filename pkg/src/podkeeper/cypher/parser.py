"""Recursive-descent parser for the supported Cypher subset.

The grammar is documented in ``docs/grammar.ebnf``.  ``parse`` returns one
of the statement dataclasses from :mod:`podkeeper.cypher.ast` and checks
that every variable used outside a pattern is bound by one.
"""

from __future__ import annotations

from podkeeper.cypher import ast
from podkeeper.cypher.lexer import INT64_MAX, CypherError, Token, tokenize


class ParseError(CypherError):
    code = "PARSE_ERROR"

    def __init__(self, message, line, column, offset, expected=(), at_eof=False):
        super().__init__(message, line, column, offset)
        self.expected = tuple(sorted(set(expected)))
        self.at_eof = at_eof

    def to_dict(self) -> dict:
        d = super().to_dict()
        d["expected"] = list(self.expected)
        return d


class UnboundVariable(CypherError):
    code = "UNBOUND_VARIABLE"

    def __init__(self, name, line, column, offset):
        super().__init__(f"variable {name!r} is not defined", line, column, offset)
        self.name = name


MAX_NESTING = 64
MAX_PATTERN_ELEMENTS = 256


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    return repr(tok.text)


class Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text, with_eof=True)
        self.i = 0
        # variable -> "node" | "rel"; reset per statement scope
        self.bound: dict[str, str] = {}
        self.row_var: str | None = None
        self.depth = 0
        self.elements = 0  # pattern elements in the current clause

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def at_kw(self, *words: str) -> bool:
        return self.tok.kind == "KEYWORD" and self.tok.value in words

    def next(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, expected, tok: Token | None = None, message: str | None = None) -> ParseError:
        tok = tok or self.tok
        expected = (expected,) if isinstance(expected, str) else tuple(expected)
        msg = message or f"expected {' or '.join(sorted(set(expected)))}, got {_describe(tok)}"
        return ParseError(msg, tok.line, tok.column, tok.offset, expected, at_eof=tok.kind == "EOF")

    def expect(self, kind: str, what: str | None = None) -> Token:
        if self.tok.kind != kind:
            raise self.error(what or kind)
        return self.next()

    def expect_kw(self, word: str) -> Token:
        if not self.at_kw(word):
            raise self.error(word)
        return self.next()

    def name(self, what: str) -> str:
        # labels, relationship types and property keys may reuse keyword spellings
        if self.tok.kind in ("IDENT", "KEYWORD"):
            return self.next().text
        raise self.error(what)

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            raise self.error(what)
        return self.next()

    # statements

    def parse_statement(self) -> ast.Statement:
        if self.at_kw("LOAD"):
            stmt = self.load_csv()
        elif self.at_kw("CREATE"):
            stmt = self.create()
        elif self.at_kw("MERGE"):
            stmt = self.merge()
        elif self.at_kw("MATCH"):
            stmt = self.match_statement()
        else:
            raise self.error(("CREATE", "LOAD", "MATCH", "MERGE"))
        if self.at("SEMI"):
            self.next()
        if not self.at("EOF"):
            raise self.error(("end of input",))
        return stmt

    def create(self) -> ast.CreateStmt:
        self.expect_kw("CREATE")
        self.elements = 0
        patterns = [self.path(mode="create")]
        while self.at("COMMA"):
            self.next()
            patterns.append(self.path(mode="create"))
        return ast.CreateStmt(tuple(patterns))

    def merge(self) -> ast.MergeStmt:
        self.expect_kw("MERGE")
        self.elements = 0
        return ast.MergeStmt(self.path(mode="create"))

    def load_csv(self) -> ast.LoadCsvStmt:
        self.expect_kw("LOAD")
        self.expect_kw("CSV")
        self.expect_kw("WITH")
        self.expect_kw("HEADERS")
        self.expect_kw("FROM")
        source = self.expect("STRING", "string literal").value
        self.expect_kw("AS")
        self.row_var = self.ident("row variable").value
        self.bound[self.row_var] = "row"
        body = []
        while self.at_kw("MERGE", "CREATE"):
            body.append(self.merge() if self.at_kw("MERGE") else self.create())
        if not body:
            raise self.error(("CREATE", "MERGE"))
        return ast.LoadCsvStmt(source, self.row_var, tuple(body))

    def match_statement(self):
        self.expect_kw("MATCH")
        self.elements = 0
        patterns = [self.path(mode="match")]
        while self.at("COMMA"):
            self.next()
            patterns.append(self.path(mode="match"))
        where = None
        if self.at_kw("WHERE"):
            self.next()
            where = self.expression()
        clause = ast.MatchClause(tuple(patterns), where)
        if self.at_kw("RETURN"):
            return self.return_part(clause)
        if self.at_kw("DELETE", "DETACH"):
            detach = False
            if self.at_kw("DETACH"):
                self.next()
                detach = True
            self.expect_kw("DELETE")
            targets = [self.bound_var()]
            while self.at("COMMA"):
                self.next()
                targets.append(self.bound_var())
            return ast.DeleteStmt(clause, detach, tuple(targets))
        if self.at_kw("SET"):
            self.next()
            items = [self.set_item()]
            while self.at("COMMA"):
                self.next()
                items.append(self.set_item())
            return ast.SetStmt(clause, tuple(items))
        expected = ["DELETE", "DETACH", "RETURN", "SET"]
        if where is None:
            expected.append("WHERE")
        raise self.error(expected)

    def return_part(self, clause: ast.MatchClause) -> ast.MatchStmt:
        self.expect_kw("RETURN")
        items = [self.return_item()]
        while self.at("COMMA"):
            self.next()
            items.append(self.return_item())
        seen = set()
        for item in items:
            if item in seen:
                raise self.error((), message="duplicate RETURN column")
            seen.add(item)
        limit = None
        if self.at_kw("LIMIT"):
            self.next()
            if self.at("INT") and self.tok.value > INT64_MAX:
                raise self.error((), message="integer literal out of 64-bit range")
            limit = self.expect("INT", "integer").value
        return ast.MatchStmt(clause.patterns, clause.where, tuple(items), limit)

    def return_item(self):
        if self.at("IDENT") and self.tok.value.lower() == "count" and self.tokens[self.i + 1].kind == "LPAREN":
            self.next()
            self.next()
            if self.at("STAR"):
                self.next()
                arg = None
            else:
                arg = self.var_or_property()
            self.expect("RPAREN", ")")
            return ast.Count(arg)
        return self.var_or_property()

    def var_or_property(self):
        tok = self.ident("variable")
        self.check_bound(tok, graph_only=True)
        if self.at("DOT"):
            self.next()
            return ast.PropertyRef(tok.value, self.name("property key"))
        return ast.Var(tok.value)

    def bound_var(self) -> str:
        tok = self.ident("variable")
        self.check_bound(tok, graph_only=True)
        return tok.value

    def set_item(self) -> ast.SetItem:
        tok = self.ident("variable")
        self.check_bound(tok, graph_only=True)
        self.expect("DOT", ".")
        key = self.name("property key")
        self.expect("EQ", "=")
        return ast.SetItem(tok.value, key, self.expression())

    def check_bound(self, tok: Token, graph_only: bool = False) -> None:
        kind = self.bound.get(tok.value)
        if kind is None or (graph_only and kind == "row"):
            raise UnboundVariable(tok.value, tok.line, tok.column, tok.offset)

    # patterns

    def path(self, mode: str) -> ast.PathPattern:
        self.count_element()
        nodes = [self.node_pattern(mode)]
        rels = []
        while self.at("MINUS") or self.at("LT"):
            self.count_element()
            rels.append(self.rel_pattern(mode))
            nodes.append(self.node_pattern(mode))
        return ast.PathPattern(tuple(nodes), tuple(rels))

    def count_element(self) -> None:
        self.elements += 1
        if self.elements > MAX_PATTERN_ELEMENTS:
            raise self.error((), message=f"more than {MAX_PATTERN_ELEMENTS} pattern elements in one clause")

    def bind(self, tok: Token, kind: str, mode: str, decorated: bool) -> None:
        prev = self.bound.get(tok.value)
        if prev is None:
            self.bound[tok.value] = kind
            return
        if prev != kind:
            raise self.error((), tok, f"variable {tok.value!r} is already bound as a {prev}")
        if kind == "rel":
            raise self.error((), tok, f"relationship variable {tok.value!r} used more than once")
        if mode == "create" and decorated:
            raise self.error((), tok, f"variable {tok.value!r} already declared; refer to it as ({tok.value})")

    def node_pattern(self, mode: str) -> ast.NodePattern:
        self.expect("LPAREN", "(")
        var_tok = None
        if self.at("IDENT"):
            var_tok = self.next()
        labels = []
        while self.at("COLON"):
            self.next()
            labels.append(self.name("label"))
        props = self.properties() if self.at("LBRACE") else ()
        if not self.at("RPAREN"):
            raise self.error((")",) if props else (")", ":", "{"))
        self.next()
        if var_tok is not None:
            self.bind(var_tok, "node", mode, bool(labels or props))
        return ast.NodePattern(var_tok.value if var_tok else None, tuple(labels), props)

    def rel_pattern(self, mode: str) -> ast.RelPattern:
        start = self.tok
        left_arrow = False
        if self.at("LT"):
            self.next()
            left_arrow = True
        self.expect("MINUS", "-")
        var_tok = None
        rel_type = None
        props = ()
        if self.at("LBRACK"):
            self.next()
            if self.at("IDENT"):
                var_tok = self.next()
            if self.at("COLON"):
                self.next()
                rel_type = self.name("relationship type")
            if self.at("LBRACE"):
                props = self.properties()
            self.expect("RBRACK", "]")
        self.expect("MINUS", "-")
        right_arrow = False
        if self.at("GT"):
            self.next()
            right_arrow = True
        if left_arrow == right_arrow:
            raise self.error((), start, "relationship patterns must have exactly one direction")
        if mode == "create" and rel_type is None:
            raise self.error(("relationship type",), start, "relationship type required when creating")
        if var_tok is not None:
            self.bind(var_tok, "rel", mode, True)
        return ast.RelPattern(var_tok.value if var_tok else None, rel_type, "<-" if left_arrow else "->", props)

    def properties(self) -> tuple:
        self.expect("LBRACE", "{")
        pairs = []
        keys = set()
        if not self.at("RBRACE"):
            while True:
                key_tok = self.tok
                key = self.name("property key")
                if key in keys:
                    raise self.error((), key_tok, f"duplicate property key {key!r}")
                keys.add(key)
                self.expect("COLON", ":")
                pairs.append((key, self.prop_value()))
                if not self.at("COMMA"):
                    break
                self.next()
        self.expect("RBRACE", "}")
        return tuple(pairs)

    def prop_value(self):
        if self.at("IDENT"):
            tok = self.next()
            if self.row_var is None or tok.value != self.row_var:
                raise UnboundVariable(tok.value, tok.line, tok.column, tok.offset)
            self.expect("DOT", ".")
            return ast.RowRef(tok.value, self.name("column name"))
        return self.literal()

    def literal(self) -> ast.Literal:
        tok = self.tok
        if tok.kind == "MINUS":
            self.next()
            num = self.tok
            if num.kind not in ("INT", "FLOAT"):
                raise self.error(("number",))
            self.next()
            return ast.Literal(-num.value)
        if tok.kind in ("STRING", "INT", "FLOAT"):
            if tok.kind == "INT" and tok.value > INT64_MAX:
                raise self.error((), message="integer literal out of 64-bit range")
            self.next()
            return ast.Literal(tok.value)
        if self.at_kw("TRUE", "FALSE", "NULL"):
            self.next()
            return ast.Literal({"TRUE": True, "FALSE": False, "NULL": None}[tok.value])
        raise self.error(("literal",))

    # expressions: or_expr > and_expr > not_expr > comparison > operand

    def expression(self):
        return self.chain("OR", ast.Or, self.and_expr)

    def and_expr(self):
        return self.chain("AND", ast.And, self.not_expr)

    def chain(self, keyword, node, operand):
        # chains are left-deep trees, so every operator counts toward the depth limit
        left = operand()
        saved = self.depth
        try:
            while self.at_kw(keyword):
                self.deeper()
                self.next()
                left = node(left, operand())
        finally:
            self.depth = saved
        return left

    def deeper(self):
        if self.depth >= MAX_NESTING:
            raise self.error((), message=f"expression nested more than {MAX_NESTING} levels deep")
        self.depth += 1

    def nested(self, parse_inner):
        saved = self.depth
        self.deeper()
        try:
            return parse_inner()
        finally:
            self.depth = saved

    def not_expr(self):
        if self.at_kw("NOT"):
            self.next()
            return ast.Not(self.nested(self.not_expr))
        return self.comparison()

    def comparison(self):
        left = self.operand()
        if self.tok.kind in ("EQ", "NE", "LT", "LE", "GT", "GE"):
            op = self.next().value
            right = self.operand()
            if self.tok.kind in ("EQ", "NE", "LT", "LE", "GT", "GE"):
                raise self.error((), message="chained comparisons are not supported; use AND")
            return ast.Comparison(op, left, right)
        return left

    def operand(self):
        if self.at("LPAREN"):
            self.next()
            inner = self.nested(self.expression)
            self.expect("RPAREN", ")")
            return inner
        if self.at("IDENT"):
            return self.var_or_property()
        try:
            return self.literal()
        except ParseError:
            raise self.error(("(", "literal", "variable")) from None


def parse(text: str) -> ast.Statement:
    """Parse one statement; a trailing semicolon is optional."""
    return Parser(text).parse_statement()
