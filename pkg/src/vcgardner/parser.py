"""Recursive-descent parser for the infix expression grammar.

The grammar (see docs/grammar.md) is the one :func:`vcgardner.expr.render`
emits, so ``parse(render(e)) == e`` structurally.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .expr import Expr, Num, Real, Symbol, add, exp, integral, log, mul, power, sqrt
from .symbols import SymbolTable, UnknownSymbolError, default_table

__all__ = ["parse", "ParseError", "UnknownSymbolError"]

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z][A-Za-z0-9]*(?:_(?:\{[A-Za-z0-9]+\}|[A-Za-z0-9]+))*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


class ParseError(ValueError):
    def __init__(self, message: str, source: str, position: int):
        self.source = source
        self.position = position
        caret = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {source}\n  {caret}")


def _tokenize(src: str):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ParseError(f"unexpected character {src[pos]!r}", src, pos)
        kind = m.lastgroup
        if kind != "ws":
            out.append((kind, m.group(kind), pos))
        pos = m.end()
    out.append(("end", "", pos))
    return out


class _Parser:
    def __init__(self, src: str, table: SymbolTable):
        self.src = src
        self.table = table
        self.toks = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"expected {value!r}, found {found}", self.src, pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", self.src, pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            terms.append(rhs if op == "+" else mul(-1, rhs))
        return terms[0] if len(terms) == 1 else add(*terms)

    def term(self) -> Expr:
        acc = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            acc = mul(acc, rhs) if op == "*" else mul(acc, power(rhs, -1))
        return acc

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            operand = self.unary()
            return mul(-1, operand) if val == "-" else operand
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            self.take()
            return power(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "number":
            if any(ch in val for ch in ".eE"):
                return Real(float(val))
            return Num(Fraction(int(val)))
        if kind == "name":
            if self.peek()[1] == "(" and val in ("exp", "log", "sqrt", "int"):
                return self.call(val, pos)
            try:
                return self.table.resolve(val)
            except UnknownSymbolError as err:
                raise ParseError(str(err), self.src, pos) from err
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {found}", self.src, pos)

    def call(self, name: str, pos: int) -> Expr:
        self.expect("(")
        arg = self.expr()
        if name == "int":
            self.expect(",")
            _, vname, vpos = self.take()
            try:
                var = self.table.resolve(vname)
            except UnknownSymbolError as err:
                raise ParseError(str(err), self.src, vpos) from err
            self.expect(",")
            lower = self._number()
            self.expect(",")
            upper = self._number()
            self.expect(")")
            if not isinstance(var, Symbol) or var.kind != "independent":
                raise ParseError("integration variable must be t or x", self.src, vpos)
            return integral(arg, var, lower, upper)
        self.expect(")")
        if name == "exp":
            return exp(arg)
        if name == "log":
            return log(arg)
        return sqrt(arg)

    def _number(self) -> float:
        sign = 1.0
        if self.peek()[1] == "-":
            self.take()
            sign = -1.0
        kind, val, pos = self.take()
        if kind != "number":
            raise ParseError("expected a number", self.src, pos)
        return sign * float(val)


def parse(source: str, table: SymbolTable | None = None) -> Expr:
    """Parse infix text into an expression over the declared symbols."""
    return _Parser(source, table or default_table()).parse()
