"""One-variable arithmetic expressions: parser, evaluation, symbolic derivative, printing.

Grammar (used by config files for the keys ``system.f`` and ``system.p``)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' INTEGER)*
    atom   := NUMBER | 'x' | '(' expr ')'

Exponents must be nonnegative integer literals.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import EvaluationError, ExpressionSyntaxError

__all__ = ["RealExpr", "parse_expression"]


class _Node:
    __slots__ = ()


@dataclass(frozen=True)
class _Num(_Node):
    value: float


@dataclass(frozen=True)
class _Var(_Node):
    pass


@dataclass(frozen=True)
class _Add(_Node):
    left: _Node
    right: _Node


@dataclass(frozen=True)
class _Sub(_Node):
    left: _Node
    right: _Node


@dataclass(frozen=True)
class _Mul(_Node):
    left: _Node
    right: _Node


@dataclass(frozen=True)
class _Div(_Node):
    left: _Node
    right: _Node


@dataclass(frozen=True)
class _Pow(_Node):
    base: _Node
    exponent: int


@dataclass(frozen=True)
class _Neg(_Node):
    operand: _Node


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<var>x)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "var":
            tokens.append(("var", "x", m.start("var")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, val, pos = self.peek()
        if kind != "op" or val != op:
            raise ExpressionSyntaxError(f"expected {op!r}", pos)
        self.advance()

    def parse(self) -> _Node:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self) -> _Node:
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                rhs = self.term()
                node = _Add(node, rhs) if val == "+" else _Sub(node, rhs)
            else:
                return node

    def term(self) -> _Node:
        node = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                rhs = self.unary()
                node = _Mul(node, rhs) if val == "*" else _Div(node, rhs)
            else:
                return node

    def unary(self) -> _Node:
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.advance()
            operand = self.unary()
            return operand if val == "+" else _Neg(operand)
        return self.power()

    def power(self) -> _Node:
        node = self.atom()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "^":
                self.advance()
                ekind, eval_, epos = self.peek()
                if ekind != "num" or not re.fullmatch(r"\d+", eval_):
                    raise ExpressionSyntaxError(
                        "exponent must be a nonnegative integer", epos
                    )
                self.advance()
                node = _Pow(node, int(eval_))
            else:
                return node

    def atom(self) -> _Node:
        kind, val, pos = self.advance()
        if kind == "num":
            return _Num(float(val))
        if kind == "var":
            return _Var()
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionSyntaxError(f"expected number, 'x' or '('", pos)


def _evaluate(node: _Node, x: float) -> float:
    if isinstance(node, _Num):
        return node.value
    if isinstance(node, _Var):
        return x
    if isinstance(node, _Add):
        return _evaluate(node.left, x) + _evaluate(node.right, x)
    if isinstance(node, _Sub):
        return _evaluate(node.left, x) - _evaluate(node.right, x)
    if isinstance(node, _Mul):
        return _evaluate(node.left, x) * _evaluate(node.right, x)
    if isinstance(node, _Div):
        den = _evaluate(node.right, x)
        if den == 0.0:
            raise EvaluationError(f"division by zero at x={x!r}")
        return _evaluate(node.left, x) / den
    if isinstance(node, _Pow):
        return _evaluate(node.base, x) ** node.exponent
    if isinstance(node, _Neg):
        return -_evaluate(node.operand, x)
    raise TypeError(f"unknown node {node!r}")


def _differentiate(node: _Node) -> _Node:
    if isinstance(node, _Num):
        return _Num(0.0)
    if isinstance(node, _Var):
        return _Num(1.0)
    if isinstance(node, _Add):
        return _Add(_differentiate(node.left), _differentiate(node.right))
    if isinstance(node, _Sub):
        return _Sub(_differentiate(node.left), _differentiate(node.right))
    if isinstance(node, _Mul):
        return _Add(
            _Mul(_differentiate(node.left), node.right),
            _Mul(node.left, _differentiate(node.right)),
        )
    if isinstance(node, _Div):
        # (u/v)' = (u'v - uv') / v^2
        return _Div(
            _Sub(
                _Mul(_differentiate(node.left), node.right),
                _Mul(node.left, _differentiate(node.right)),
            ),
            _Pow(node.right, 2),
        )
    if isinstance(node, _Pow):
        if node.exponent == 0:
            return _Num(0.0)
        return _Mul(
            _Mul(_Num(float(node.exponent)), _Pow(node.base, node.exponent - 1)),
            _differentiate(node.base),
        )
    if isinstance(node, _Neg):
        return _Neg(_differentiate(node.operand))
    raise TypeError(f"unknown node {node!r}")


_PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _print(node: _Node, parent_prec: int) -> str:
    if isinstance(node, _Num):
        v = node.value
        if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
            text, prec = repr(v), _PREC_UNARY
        elif v == int(v) and abs(v) < 1e16:
            text, prec = str(int(v)), _PREC_ATOM
        else:
            text, prec = repr(v), _PREC_ATOM
    elif isinstance(node, _Var):
        text, prec = "x", _PREC_ATOM
    elif isinstance(node, _Add):
        text = f"{_print(node.left, _PREC_ADD)} + {_print(node.right, _PREC_ADD + 1)}"
        prec = _PREC_ADD
    elif isinstance(node, _Sub):
        text = f"{_print(node.left, _PREC_ADD)} - {_print(node.right, _PREC_ADD + 1)}"
        prec = _PREC_ADD
    elif isinstance(node, _Mul):
        text = f"{_print(node.left, _PREC_MUL)}*{_print(node.right, _PREC_MUL + 1)}"
        prec = _PREC_MUL
    elif isinstance(node, _Div):
        text = f"{_print(node.left, _PREC_MUL)}/{_print(node.right, _PREC_MUL + 1)}"
        prec = _PREC_MUL
    elif isinstance(node, _Pow):
        text = f"{_print(node.base, _PREC_ATOM)}^{node.exponent}"
        prec = _PREC_POW
    elif isinstance(node, _Neg):
        text = f"-{_print(node.operand, _PREC_UNARY)}"
        prec = _PREC_UNARY
    else:
        raise TypeError(f"unknown node {node!r}")
    if prec < parent_prec:
        return f"({text})"
    return text


@dataclass(frozen=True)
class RealExpr:
    """Immutable arithmetic expression in one variable x.

    Evaluation is deterministic, the derivative is obtained symbolically, and
    ``parse_expression(str(e))`` evaluates identically to ``e``.
    """

    root: _Node

    def __call__(self, x: float) -> float:
        return _evaluate(self.root, x)

    def derivative(self) -> "RealExpr":
        return RealExpr(_differentiate(self.root))

    def __str__(self) -> str:
        return _print(self.root, 0)


def parse_expression(text: str) -> RealExpr:
    """Parse expression text into a :class:`RealExpr`.

    Raises :class:`~canard_lab.errors.ExpressionSyntaxError` with the offending
    position on malformed input.
    """
    return RealExpr(_Parser(text).parse())
