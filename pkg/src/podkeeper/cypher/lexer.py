from __future__ import annotations

from dataclasses import dataclass

from podkeeper.errors import PodkeeperError

KEYWORDS = frozenset(
    {
        "MATCH", "WHERE", "RETURN", "LIMIT", "CREATE", "MERGE", "DELETE", "DETACH",
        "SET", "LOAD", "CSV", "WITH", "HEADERS", "FROM", "AS", "AND", "OR", "NOT",
        "TRUE", "FALSE", "NULL",
    }
)

PUNCT = {
    "(": "LPAREN", ")": "RPAREN", "[": "LBRACK", "]": "RBRACK", "{": "LBRACE",
    "}": "RBRACE", ":": "COLON", ",": "COMMA", ".": "DOT", ";": "SEMI", "-": "MINUS",
    "*": "STAR", "=": "EQ", "<": "LT", ">": "GT",
}
TWO_CHAR = {"<=": "LE", ">=": "GE", "<>": "NE"}

ESCAPES = {"'": "'", "\\": "\\", "n": "\n", "t": "\t", "r": "\r", '"': '"'}

INT64_MAX = 2**63 - 1


class CypherError(PodkeeperError):
    """Error tied to a position in the query text (1-based line and column)."""

    def __init__(self, message: str, line: int, column: int, offset: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.detail = message
        self.line = line
        self.column = column
        self.offset = offset

    def to_dict(self) -> dict:
        return {"line": self.line, "column": self.column, "offset": self.offset}


class LexError(CypherError):
    code = "LEX_ERROR"


@dataclass(frozen=True)
class Token:
    kind: str  # KEYWORD, IDENT, STRING, INT, FLOAT, a PUNCT name, or EOF
    text: str
    value: object
    line: int
    column: int
    offset: int

    def __repr__(self):
        if self.kind in ("KEYWORD",):
            return self.value
        if self.kind in ("IDENT", "STRING", "INT", "FLOAT"):
            return f"{self.kind}({self.value})"
        return self.kind


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.text[i] if i < len(self.text) else ""

    def advance(self, n: int = 1) -> str:
        chunk = self.text[self.pos:self.pos + n]
        for ch in chunk:
            if ch == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
        self.pos += n
        return chunk

    def error(self, message: str, line: int | None = None, col: int | None = None, offset: int | None = None):
        off = self.pos if offset is None else offset
        off = min(off, max(len(self.text) - 1, 0))
        return LexError(message, line or self.line, col or self.col, off)


def _is_ident_start(ch: str) -> bool:
    return ch == "_" or ("a" <= ch <= "z") or ("A" <= ch <= "Z")


def _is_ident_char(ch: str) -> bool:
    return _is_ident_start(ch) or ch.isdigit() and ch.isascii()


def _is_digit(ch: str) -> bool:
    return "0" <= ch <= "9"


def tokenize(text: str, *, with_eof: bool = False) -> list[Token]:
    """Split ``text`` into tokens; keywords are case-insensitive."""
    s = _Scanner(text)
    out: list[Token] = []
    while True:
        ch = s.peek()
        if ch == "":
            break
        if ch in " \t\r\n":
            s.advance()
            continue
        if ch == "/" and s.peek(1) == "/":
            while s.peek() not in ("", "\n"):
                s.advance()
            continue
        line, col, start = s.line, s.col, s.pos
        if _is_ident_start(ch):
            while _is_ident_char(s.peek()):
                s.advance()
            word = text[start:s.pos]
            upper = word.upper()
            if upper in KEYWORDS:
                out.append(Token("KEYWORD", word, upper, line, col, start))
            else:
                out.append(Token("IDENT", word, word, line, col, start))
        elif _is_digit(ch):
            out.append(_number(s, line, col, start))
        elif ch == "'":
            out.append(_string(s, line, col, start))
        elif text[s.pos:s.pos + 2] in TWO_CHAR:
            two = s.advance(2)
            out.append(Token(TWO_CHAR[two], two, two, line, col, start))
        elif ch in PUNCT:
            s.advance()
            out.append(Token(PUNCT[ch], ch, ch, line, col, start))
        else:
            raise s.error(f"illegal character {ch!r}")
    if with_eof:
        # point at the last character so positions stay inside the input
        off = max(len(text) - 1, 0)
        line = text.count("\n", 0, off) + 1
        col = off - (text.rfind("\n", 0, off) + 1) + 1
        out.append(Token("EOF", "", None, line, col, off))
    return out


def _number(s: _Scanner, line: int, col: int, start: int) -> Token:
    text = s.text
    while _is_digit(s.peek()):
        s.advance()
    is_float = False
    if s.peek() == "." and _is_digit(s.peek(1)):
        is_float = True
        s.advance()
        while _is_digit(s.peek()):
            s.advance()
    if s.peek() in ("e", "E"):
        k = 1
        if s.peek(1) in ("+", "-"):
            k = 2
        if _is_digit(s.peek(k)):
            is_float = True
            s.advance(k)
            while _is_digit(s.peek()):
                s.advance()
    if _is_ident_char(s.peek()):
        raise s.error("invalid number literal", line, col, start)
    lexeme = text[start:s.pos]
    if is_float:
        value = float(lexeme)
        if value in (float("inf"), float("-inf")):
            raise s.error("float literal out of range", line, col, start)
        return Token("FLOAT", lexeme, value, line, col, start)
    value = int(lexeme)
    # 2**63 is only valid after a minus sign; the parser checks that
    if value > INT64_MAX + 1:
        raise s.error("integer literal out of 64-bit range", line, col, start)
    return Token("INT", lexeme, value, line, col, start)


def _string(s: _Scanner, line: int, col: int, start: int) -> Token:
    s.advance()  # opening quote
    chars = []
    while True:
        ch = s.peek()
        if ch == "":
            raise s.error("unterminated string literal", line, col, start)
        if ch == "'":
            s.advance()
            break
        if ch == "\\":
            esc = s.peek(1)
            if esc not in ESCAPES:
                raise s.error(f"invalid escape sequence \\{esc}" if esc else "unterminated string literal")
            s.advance(2)
            chars.append(ESCAPES[esc])
            continue
        chars.append(s.advance())
    return Token("STRING", s.text[start:s.pos], "".join(chars), line, col, start)
