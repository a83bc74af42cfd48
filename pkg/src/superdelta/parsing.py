"""Recursive-descent parser for graded rational expressions.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" ["-"] INT)?
    atom   := INT | IDENT | "(" expr ")"

Rational literals are written as quotients (``3/2``).  Divisors must be
even with a nonzero body; odd bases may not be raised to powers >= 2.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .graded import ODD, Chart, SuperExpr, ZeroBodyError, invert


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


_TOKEN = re.compile(r"\s*(?:(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise _err_at(text, len(text) - len(text[pos:].lstrip()), f"unexpected character {text[pos:].lstrip()[:1]!r}")
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", n))
    return toks


def _err_at(text: str, pos: int, message: str, line0: int = 1, col0: int = 1) -> ParseError:
    before = text[:pos]
    line = before.count("\n")
    col = pos - (before.rfind("\n") + 1) if line else pos
    return ParseError(message, line0 + line, (col0 if line == 0 else 1) + col)


class _Parser:
    def __init__(self, text: str, chart: Chart, line0: int, col0: int):
        self.text = text
        self.chart = chart
        self.line0 = line0
        self.col0 = col0
        self.toks = _tokenize_wrapped(text, line0, col0)
        self.i = 0

    def error(self, tok: _Tok, message: str) -> ParseError:
        return _err_at(self.text, tok.pos, message, self.line0, self.col0)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str):
        t = self.take()
        if t.text != text:
            raise self.error(t, f"expected {text!r}, found {t.text or 'end of input'!r}")
        return t

    def parse(self) -> SuperExpr:
        e = self.expr()
        if self.tok.kind != "end":
            raise self.error(self.tok, f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> SuperExpr:
        e = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.take().text
            r = self.term()
            e = e + r if op == "+" else e - r
        return e

    def term(self) -> SuperExpr:
        e = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op_tok = self.take()
            start = self.tok
            r = self.unary()
            if op_tok.text == "*":
                e = e * r
            else:
                e = e * self._reciprocal(r, start)
        return e

    def _reciprocal(self, r: SuperExpr, where: _Tok) -> SuperExpr:
        if not r.is_homogeneous() or r.parity == ODD:
            raise self.error(where, "division by an expression that is not even")
        try:
            return invert(r)
        except ZeroBodyError:
            raise self.error(where, "division by an expression with zero even body") from None

    def unary(self) -> SuperExpr:
        if self.tok.kind == "op" and self.tok.text in ("+", "-"):
            op = self.take().text
            e = self.unary()
            return -e if op == "-" else e
        return self.power()

    def power(self) -> SuperExpr:
        start = self.tok
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.take()
            neg = False
            if self.tok.text == "-":
                self.take()
                neg = True
            t = self.take()
            if t.kind != "int":
                raise self.error(t, "exponent must be an integer literal")
            n = int(t.text)
            if base and base.is_homogeneous() and base.parity == ODD and n >= 2:
                raise self.error(start, "odd expression raised to a power >= 2")
            if neg:
                base = self._reciprocal(base, start)
            return base ** n
        return base

    def atom(self) -> SuperExpr:
        t = self.take()
        if t.kind == "int":
            return self.chart.const(int(t.text))
        if t.kind == "ident":
            if t.text not in self.chart:
                raise self.error(t, f"unknown identifier {t.text!r}")
            return self.chart.var(t.text)
        if t.text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise self.error(t, f"unexpected {t.text or 'end of input'!r}")


def _tokenize_wrapped(text, line0, col0):
    try:
        return _tokenize(text)
    except ParseError as exc:
        raise ParseError(exc.message, line0 + exc.line - 1, (col0 - 1 if exc.line == 1 else 0) + exc.column) from None


def parse_expr(text: str, chart: Chart, line: int = 1, column: int = 1) -> SuperExpr:
    """Parse ``text`` on ``chart``.

    ``line``/``column`` give the position of ``text`` inside a larger
    document so errors point at the right place.
    """
    if not text.strip():
        raise ParseError("empty expression", line, column)
    return _Parser(text, chart, line, column).parse()
