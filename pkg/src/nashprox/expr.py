"""Arithmetic expressions over named real variables.

This is the input language for payoff functions and constraint-map bounds:
real literals, variables matching ``[A-Za-z_][A-Za-z0-9_]*``, the binary
operators ``+ - * / ^``, unary minus, and the functions ``sqrt, abs, exp,
log, min, max`` (min and max take exactly two arguments).

Precedence, loosest to tightest: ``+ -``, then ``* /``, then unary minus,
then ``^``.  ``^`` is right-associative, the binary operators are
left-associative.  Trees are immutable and evaluation is pure, so parsed
expressions can be shared freely across threads.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "BinOp",
    "Call",
    "DomainError",
    "EvalError",
    "ExprError",
    "Expression",
    "Neg",
    "Num",
    "ParseError",
    "UnboundVariableError",
    "Var",
    "evaluate",
    "grad_fd",
    "parse",
    "unparse",
    "variables",
]


class ExprError(Exception):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class EvalError(ExprError):
    pass


class UnboundVariableError(EvalError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable '{name}'")
        self.name = name


class DomainError(EvalError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expression"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expression", ...]


Expression = Union[Num, Var, Neg, BinOp, Call]

_FUNCTIONS = {"sqrt": 1, "abs": 1, "exp": 1, "log": 1, "min": 2, "max": 2}
_BIN_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}
_UNARY_PREC = 3
_PREC_ATOM = 5

_TOKEN = re.compile(
    r"(?P<num>(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[+\-*/^(),])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {text[i]!r}", i)
        tokens.append(_Token(m.lastgroup, m.group(), i))
        i = m.end()
    # The end marker points at the last real token so truncated input is
    # reported where the parse actually got stuck.
    end_pos = tokens[-1].pos if tokens else 0
    tokens.append(_Token("end", "", end_pos))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        if t.kind != "end":
            self.i += 1
        return t

    def expect(self, text: str) -> None:
        t = self.peek()
        if t.kind == "end":
            raise ParseError("unexpected end of input", t.pos)
        if t.text != text:
            raise ParseError(f"expected '{text}' but found {t.text!r}", t.pos)
        self.advance()

    def parse_expr(self, min_prec: int) -> Expression:
        left = self.parse_atom()
        while True:
            t = self.peek()
            if t.kind != "op" or t.text not in _BIN_PREC:
                return left
            prec = _BIN_PREC[t.text]
            if prec < min_prec:
                return left
            self.advance()
            next_min = prec if t.text == "^" else prec + 1
            right = self.parse_expr(next_min)
            left = BinOp(t.text, left, right)

    def parse_atom(self) -> Expression:
        t = self.peek()
        if t.kind == "end":
            raise ParseError("unexpected end of input", t.pos)
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if self.peek().text == "(" and self.peek().kind == "op":
                return self.parse_call(t)
            return Var(t.text)
        if t.text == "-":
            self.advance()
            return Neg(self.parse_expr(_UNARY_PREC))
        if t.text == "(":
            self.advance()
            inner = self.parse_expr(1)
            self.expect(")")
            return inner
        raise ParseError(f"unexpected token {t.text!r}", t.pos)

    def parse_call(self, name_tok: _Token) -> Expression:
        if name_tok.text not in _FUNCTIONS:
            raise ParseError(f"unknown function '{name_tok.text}'", name_tok.pos)
        self.advance()  # "("
        args = [self.parse_expr(1)]
        while self.peek().text == "," and self.peek().kind == "op":
            self.advance()
            args.append(self.parse_expr(1))
        self.expect(")")
        arity = _FUNCTIONS[name_tok.text]
        if len(args) != arity:
            raise ParseError(
                f"{name_tok.text} expects {arity} argument(s), got {len(args)}",
                name_tok.pos,
            )
        return Call(name_tok.text, tuple(args))


def parse(text: str) -> Expression:
    """Parse *text* into an expression tree, honoring the operator table."""
    p = _Parser(_tokenize(text))
    e = p.parse_expr(1)
    t = p.peek()
    if t.kind != "end":
        raise ParseError(f"unexpected token {t.text!r}", t.pos)
    return e


def _prec(e: Expression) -> int:
    if isinstance(e, BinOp):
        return _BIN_PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY_PREC
    return _PREC_ATOM


def unparse(e: Expression) -> str:
    """Render a tree back to text; re-parsing yields a structurally equal tree."""
    if isinstance(e, Num):
        v = e.value
        if v == int(v) and abs(v) < 1e16:
            return str(int(v))
        return repr(v)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        s = unparse(e.operand)
        if _prec(e.operand) < _UNARY_PREC:
            s = f"({s})"
        return f"-{s}"
    if isinstance(e, BinOp):
        prec = _BIN_PREC[e.op]
        ls, rs = unparse(e.left), unparse(e.right)
        if e.op == "^":
            if _prec(e.left) <= prec:
                ls = f"({ls})"
            if _prec(e.right) < prec:
                rs = f"({rs})"
        else:
            if _prec(e.left) < prec:
                ls = f"({ls})"
            if _prec(e.right) <= prec:
                rs = f"({rs})"
        if e.op in "+-":
            return f"{ls} {e.op} {rs}"
        return f"{ls}{e.op}{rs}"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(unparse(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expression) -> frozenset[str]:
    """Collect the variable names referenced anywhere in *e*."""
    out: set[str] = set()
    stack: list[Expression] = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.name)
        elif isinstance(node, Neg):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.append(node.left)
            stack.append(node.right)
        elif isinstance(node, Call):
            stack.extend(node.args)
    return frozenset(out)


def _int_pow(base, n: int):
    if n == 0:
        return np.ones_like(base, dtype=float) if np.ndim(base) else 1.0
    result = None
    b = base
    while n:
        if n & 1:
            result = b if result is None else result * b
        n >>= 1
        if n:
            b = b * b
    return result


def _power(a, b, node: BinOp):
    if np.ndim(b) == 0:
        bf = float(b)
        if math.isfinite(bf) and bf == math.floor(bf) and abs(bf) <= 2**31:
            n = int(bf)
            if n >= 0:
                return _int_pow(a, n)
            if np.any(np.asarray(a) == 0):
                raise DomainError("zero raised to a negative power", unparse(node))
            return 1.0 / _int_pow(a, -n)
    if np.any(np.asarray(a) <= 0):
        raise DomainError(
            "non-positive base with non-integer exponent", unparse(node)
        )
    return np.exp(b * np.log(a))


def evaluate(e: Expression, env: dict):
    """Evaluate *e* under variable bindings *env*.

    Bindings may be floats or equally shaped numpy arrays; arrays are
    evaluated elementwise in a single tree walk.  Integer powers use repeated
    squaring (so negative bases are fine); other exponents go through
    exp(y*log(x)) and require a positive base.  Domain problems (square root
    of a negative, log of a non-positive, division by zero) raise
    :class:`DomainError` naming the offending subexpression.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnboundVariableError(e.name) from None
    if isinstance(e, Neg):
        return -evaluate(e.operand, env)
    if isinstance(e, BinOp):
        a = evaluate(e.left, env)
        b = evaluate(e.right, env)
        op = e.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(np.asarray(b) == 0):
                raise DomainError("division by zero", unparse(e))
            return a / b
        return _power(a, b, e)
    if isinstance(e, Call):
        if e.func == "min" or e.func == "max":
            a = evaluate(e.args[0], env)
            b = evaluate(e.args[1], env)
            return np.minimum(a, b) if e.func == "min" else np.maximum(a, b)
        x = evaluate(e.args[0], env)
        if e.func == "sqrt":
            if np.any(np.asarray(x) < 0):
                raise DomainError("square root of a negative number", unparse(e))
            return np.sqrt(x)
        if e.func == "abs":
            return np.abs(x)
        if e.func == "exp":
            return np.exp(x)
        if e.func == "log":
            if np.any(np.asarray(x) <= 0):
                raise DomainError("logarithm of a non-positive number", unparse(e))
            return np.log(x)
    raise TypeError(f"not an expression node: {e!r}")


def grad_fd(
    e: Expression,
    env: dict,
    var_names: list[str],
    h: float | None = None,
) -> np.ndarray:
    """Central-difference gradient of *e* at *env* along *var_names*.

    The step defaults to 1e-6 * max(1, |value|) per variable.  Evaluation
    errors at the perturbed points propagate.
    """
    g = np.empty(len(var_names))
    for j, name in enumerate(var_names):
        if name not in env:
            raise UnboundVariableError(name)
        x = float(env[name])
        hj = h if h is not None else 1e-6 * max(1.0, abs(x))
        up = dict(env)
        up[name] = x + hj
        dn = dict(env)
        dn[name] = x - hj
        g[j] = (evaluate(e, up) - evaluate(e, dn)) / (2.0 * hj)
    return g
