"""Lexer, parser and renderer for the Cypher subset served by pods."""

from podkeeper.cypher import ast
from podkeeper.cypher.lexer import CypherError, LexError, Token, tokenize
from podkeeper.cypher.parser import ParseError, UnboundVariable, parse
from podkeeper.cypher.render import render, render_expr, render_string

__all__ = [
    "CypherError",
    "LexError",
    "ParseError",
    "Token",
    "UnboundVariable",
    "ast",
    "parse",
    "render",
    "render_expr",
    "render_string",
    "tokenize",
]
