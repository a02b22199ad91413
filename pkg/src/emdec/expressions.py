"""Tiny arithmetic expression language for source terms.

Grammar (recursive descent, no dependencies):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | atom
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names: the variables x, y, z, t, the constant pi, and the functions
sin, cos, exp.  Expressions evaluate on scalars or numpy arrays.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import ExpressionError

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?|([A-Za-z_]\w*)|(.))")

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTANTS = {"pi": math.pi}
_VARIABLES = ("x", "y", "z", "t")


class Expression:
    """A parsed expression; call with (x, y, z, t) scalars or arrays."""

    def __init__(self, source: str, fn, names: set[str]):
        self.source = source
        self._fn = fn
        self.names = names

    def __call__(self, x=0.0, y=0.0, z=0.0, t=0.0):
        return self._fn({"x": x, "y": y, "z": z, "t": t})

    def __repr__(self):
        return f"Expression({self.source!r})"


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"cannot tokenize {text[pos:]!r} at column {pos + 1}")
        number, exponent, name, other = m.groups()
        start = m.start(1) if number else (m.start(3) if name else m.start(4))
        if number:
            tokens.append(("num", float(number + (exponent or "")), start))
        elif name:
            tokens.append(("name", name, start))
        elif other.strip():
            if other not in "+-*/()":
                raise ExpressionError(f"unexpected character {other!r} at column {start + 1}")
            tokens.append(("op", other, start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names: set[str] = set()

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, col = self.take()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r} at column {col + 1} in {self.text!r}")

    def parse(self):
        fn = self.expr()
        kind, val, col = self.peek()
        if kind != "end":
            raise ExpressionError(f"trailing input {val!r} at column {col + 1}")
        return fn

    def expr(self):
        fn = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            if op == "+":
                fn = (lambda a, b: lambda env: a(env) + b(env))(fn, rhs)
            else:
                fn = (lambda a, b: lambda env: a(env) - b(env))(fn, rhs)
        return fn

    def term(self):
        fn = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                fn = (lambda a, b: lambda env: a(env) * b(env))(fn, rhs)
            else:
                fn = (lambda a, b: lambda env: a(env) / b(env))(fn, rhs)
        return fn

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            inner = self.unary()
            if val == "-":
                return lambda env: -inner(env)
            return inner
        return self.atom()

    def atom(self):
        kind, val, col = self.take()
        if kind == "num":
            return lambda env, _v=val: _v
        if kind == "name":
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                fn = _FUNCTIONS[val]
                return lambda env, _f=fn, _a=arg: _f(_a(env))
            if val in _CONSTANTS:
                return lambda env, _v=_CONSTANTS[val]: _v
            if val in _VARIABLES:
                self.names.add(val)
                return lambda env, _n=val: env[_n]
            raise ExpressionError(f"unknown name {val!r} at column {col + 1}")
        if kind == "op" and val == "(":
            fn = self.expr()
            self.expect_op(")")
            return fn
        raise ExpressionError(f"unexpected token at column {col + 1} in {self.text!r}")


def parse_expression(text: str) -> Expression:
    """Parse an expression, raising ExpressionError with a column number."""
    if not text.strip():
        raise ExpressionError("empty expression")
    parser = _Parser(text)
    fn = parser.parse()
    return Expression(text, fn, parser.names)
