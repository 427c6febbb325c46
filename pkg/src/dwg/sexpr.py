"""S-expression reader and printer shared by the ontology and model file formats.

Syntax: lists in parentheses, double-quoted strings, decimal numbers,
keywords (leading colon), symbols for everything else. A semicolon starts
a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ParseError

_NUMBER_RE = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")
_ATOM_END = set(' \t\r\n();"')
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class SExpr:
    """One node of the parse tree. Locations are ignored by equality."""

    kind: str  # "symbol" | "keyword" | "string" | "number" | "list"
    value: object
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)

    @property
    def items(self) -> tuple["SExpr", ...]:
        assert self.kind == "list"
        return self.value  # type: ignore[return-value]

    def is_symbol(self, name: str | None = None) -> bool:
        return self.kind == "symbol" and (name is None or self.value == name)

    def is_keyword(self, name: str | None = None) -> bool:
        return self.kind == "keyword" and (name is None or self.value == name)

    def is_list(self) -> bool:
        return self.kind == "list"

    def __str__(self) -> str:
        return print_sexpr(self)


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def advance(self) -> str:
        ch = self.text[self.pos]
        self.pos += 1
        if ch == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def skip_blank(self) -> None:
        while self.pos < len(self.text):
            ch = self.peek()
            if ch in " \t\r\n":
                self.advance()
            elif ch == ";":
                while self.pos < len(self.text) and self.peek() != "\n":
                    self.advance()
            else:
                return

    def read_string(self) -> SExpr:
        line, col = self.line, self.col
        self.advance()  # opening quote
        out: list[str] = []
        while True:
            if self.pos >= len(self.text):
                raise ParseError("unterminated string", line, col)
            ch = self.advance()
            if ch == '"':
                return SExpr("string", "".join(out), line, col)
            if ch == "\\":
                if self.pos >= len(self.text):
                    raise ParseError("unterminated string", line, col)
                esc = self.advance()
                if esc not in _ESCAPES:
                    raise ParseError(f"invalid escape '\\{esc}'", self.line, self.col - 2)
                out.append(_ESCAPES[esc])
            else:
                out.append(ch)

    def read_atom(self) -> SExpr:
        line, col = self.line, self.col
        out: list[str] = []
        while self.pos < len(self.text) and self.peek() not in _ATOM_END:
            out.append(self.advance())
        token = "".join(out)
        if token.startswith(":"):
            if len(token) == 1:
                raise ParseError("bare ':' is not a keyword", line, col)
            return SExpr("keyword", token[1:], line, col)
        if _NUMBER_RE.match(token):
            num = float(token) if any(c in token for c in ".eE") else int(token)
            return SExpr("number", num, line, col)
        return SExpr("symbol", token, line, col)

    def read_expr(self) -> SExpr:
        self.skip_blank()
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of input", self.line, self.col)
        ch = self.peek()
        if ch == "(":
            line, col = self.line, self.col
            self.advance()
            items: list[SExpr] = []
            while True:
                self.skip_blank()
                if self.pos >= len(self.text):
                    raise ParseError("unclosed list", line, col)
                if self.peek() == ")":
                    self.advance()
                    return SExpr("list", tuple(items), line, col)
                items.append(self.read_expr())
        if ch == ")":
            raise ParseError("unexpected ')'", self.line, self.col)
        if ch == '"':
            return self.read_string()
        return self.read_atom()


def parse_sexprs(text: str) -> list[SExpr]:
    """Parse all top-level forms in ``text``, skipping comments."""
    scanner = _Scanner(text)
    forms: list[SExpr] = []
    while True:
        scanner.skip_blank()
        if scanner.pos >= len(scanner.text):
            return forms
        forms.append(scanner.read_expr())


def _escape(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    return out.replace("\n", "\\n").replace("\t", "\\t")


def print_sexpr(expr: SExpr) -> str:
    """Render one expression; ``parse_sexprs(print_sexpr(e))[0] == e``."""
    if expr.kind == "symbol":
        return str(expr.value)
    if expr.kind == "keyword":
        return f":{expr.value}"
    if expr.kind == "string":
        return f'"{_escape(expr.value)}"'  # type: ignore[arg-type]
    if expr.kind == "number":
        return repr(expr.value)
    return "(" + " ".join(print_sexpr(item) for item in expr.items) + ")"


# Small constructors, mainly for writers and tests.

def sym(name: str) -> SExpr:
    return SExpr("symbol", name)


def kw(name: str) -> SExpr:
    return SExpr("keyword", name)


def string(text: str) -> SExpr:
    return SExpr("string", text)


def lst(*items: SExpr) -> SExpr:
    return SExpr("list", tuple(items))
