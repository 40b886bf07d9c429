"""Scalar fields on the gasket given as small arithmetic expressions.

Grammar (whitespace is insignificant)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``^`` is right-associative and binds tighter than unary minus, so
``-x^2 == -(x^2)`` and ``2^-1 == 0.5``.  Names are ``x``, ``y``, ``pi`` and
``sqrt3``; functions are ``sin cos exp sqrt abs``.  There is no implicit
multiplication.
"""

from __future__ import annotations

import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .lattice import SGLattice

__all__ = [
    "Num",
    "Var",
    "Const",
    "Neg",
    "BinOp",
    "Call",
    "FieldExpr",
    "FieldParseError",
    "FieldEvalError",
    "VertexFunction",
    "parse_expression",
    "to_text",
    "eval_field",
    "compile_field",
    "sample",
    "sup_norm",
    "thread_count",
]


class FieldParseError(ValueError):
    def __init__(self, message: str, offset: int, text: str):
        super().__init__(f"{message} at offset {offset} in {text!r}")
        self.offset = offset
        self.text = text


class FieldEvalError(ArithmeticError):
    def __init__(self, message: str, subexpr: str, vertex: int | None = None):
        where = f" at vertex {vertex}" if vertex is not None else ""
        super().__init__(f"{message} in '{subexpr}'{where}")
        self.reason = message
        self.subexpr = subexpr
        self.vertex = vertex


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 'x' or 'y'


@dataclass(frozen=True)
class Const:
    name: str  # 'pi' or 'sqrt3'


@dataclass(frozen=True)
class Neg:
    operand: "FieldExpr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "FieldExpr"
    right: "FieldExpr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "FieldExpr"


FieldExpr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "sqrt3": math.sqrt(3.0)}
FUNCTIONS = ("sin", "cos", "exp", "sqrt", "abs")

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise FieldParseError(f"unexpected character {text[pos]!r}", pos, text)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(text)))
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, value, offset = self.peek()
        found = "end of input" if kind == "end" else repr(value)
        raise FieldParseError(f"expected {expected}, found {found}", offset, self.text)

    def expect_op(self, op: str):
        kind, value, _ = self.peek()
        if kind != "op" or value != op:
            self.fail(f"'{op}'")
        self.take()

    def parse(self) -> FieldExpr:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail("operator or end of input")
        return node

    def expr(self) -> FieldExpr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> FieldExpr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> FieldExpr:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> FieldExpr:
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> FieldExpr:
        kind, value, offset = self.peek()
        if kind == "num":
            self.take()
            return Num(float(value))
        if kind == "name":
            self.take()
            if value in ("x", "y"):
                return Var(value)
            if value in CONSTANTS:
                return Const(value)
            if value in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(value, arg)
            raise FieldParseError(f"unknown name {value!r}", offset, self.text)
        if kind == "op" and value == "(":
            self.take()
            node = self.expr()
            self.expect_op(")")
            return node
        self.fail("number, name or '('")


def parse_expression(text: str) -> FieldExpr:
    """Parse ``text`` into an expression tree.

    Raises FieldParseError carrying the offending character offset.
    """
    return _Parser(text).parse()


def to_text(e: FieldExpr) -> str:
    """Fully parenthesized text that reparses to an identical tree."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_text(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_text(e.left)}{e.op}{to_text(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def _pow(a: float, b: float, node: FieldExpr) -> float:
    if a < 0.0 and not float(b).is_integer():
        raise FieldEvalError("fractional power of a negative number", to_text(node))
    if a == 0.0 and b < 0.0:
        raise FieldEvalError("division by zero", to_text(node))
    try:
        return math.pow(a, b)
    except OverflowError:
        raise FieldEvalError("overflow", to_text(node)) from None


def compile_field(e: FieldExpr) -> Callable[[float, float], float]:
    """Turn a tree into a closure ``(x, y) -> float``.

    Operands are evaluated left to right with ``math`` functions, so the
    result is the same 64-bit value as :func:`eval_field`.
    """
    if isinstance(e, Num):
        v = e.value
        return lambda x, y: v
    if isinstance(e, Var):
        return (lambda x, y: x) if e.name == "x" else (lambda x, y: y)
    if isinstance(e, Const):
        v = CONSTANTS[e.name]
        return lambda x, y: v
    if isinstance(e, Neg):
        f = compile_field(e.operand)
        return lambda x, y: -f(x, y)
    if isinstance(e, BinOp):
        lf, rf = compile_field(e.left), compile_field(e.right)
        if e.op == "+":
            return lambda x, y: lf(x, y) + rf(x, y)
        if e.op == "-":
            return lambda x, y: lf(x, y) - rf(x, y)
        if e.op == "*":
            return lambda x, y: lf(x, y) * rf(x, y)
        if e.op == "/":
            def div(x, y):
                a = lf(x, y)
                b = rf(x, y)
                if b == 0.0:
                    raise FieldEvalError("division by zero", to_text(e))
                return a / b
            return div
        if e.op == "^":
            return lambda x, y: _pow(lf(x, y), rf(x, y), e)
    if isinstance(e, Call):
        af = compile_field(e.arg)
        if e.func == "sqrt":
            def sqrt(x, y):
                a = af(x, y)
                if a < 0.0:
                    raise FieldEvalError("square root of a negative number", to_text(e))
                return math.sqrt(a)
            return sqrt
        if e.func == "exp":
            def exp(x, y):
                try:
                    return math.exp(af(x, y))
                except OverflowError:
                    raise FieldEvalError("overflow", to_text(e)) from None
            return exp
        fn = {"sin": math.sin, "cos": math.cos, "abs": abs}[e.func]
        return lambda x, y: fn(af(x, y))
    raise TypeError(f"not an expression node: {e!r}")


def eval_field(e: FieldExpr | str, x: float, y: float) -> float:
    if isinstance(e, str):
        e = parse_expression(e)
    value = compile_field(e)(float(x), float(y))
    if not math.isfinite(value):
        raise FieldEvalError("non-finite value", to_text(e))
    return float(value)


class VertexFunction:
    """Real values on every vertex of a lattice, in canonical vertex order."""

    __slots__ = ("lattice", "values")

    def __init__(self, lattice: SGLattice, values):
        values = np.array(values, dtype=float)
        if values.shape != (len(lattice),):
            raise ValueError(
                f"expected {len(lattice)} values, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise FieldEvalError("non-finite value", "<values>", bad)
        values.setflags(write=False)
        self.lattice = lattice
        self.values = values

    def __repr__(self) -> str:
        return f"VertexFunction(level={self.lattice.level}, n={len(self.values)})"

    def _coerce(self, other):
        if isinstance(other, VertexFunction):
            if other.lattice is not self.lattice and len(other.lattice) != len(self.lattice):
                raise ValueError("vertex functions live on different lattices")
            return other.values
        return other

    def __add__(self, other):
        return VertexFunction(self.lattice, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return VertexFunction(self.lattice, self.values - self._coerce(other))

    def __rsub__(self, other):
        return VertexFunction(self.lattice, self._coerce(other) - self.values)

    def __mul__(self, other):
        return VertexFunction(self.lattice, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return VertexFunction(self.lattice, -self.values)

    def restrict(self, n: int) -> np.ndarray:
        """Values on ``V_n`` (an index prefix)."""
        return self.values[: self.lattice.count(n)]


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("SGFRACTAL_THREADS", "1") or 1)
    return max(1, int(threads))


def sample(
    e: FieldExpr | str, lat: SGLattice, threads: int | None = None
) -> VertexFunction:
    """Evaluate ``e`` at every vertex of ``lat``.

    Evaluation is pure per vertex, so the result does not depend on the
    number of worker threads.
    """
    if isinstance(e, str):
        e = parse_expression(e)
    fn = compile_field(e)
    xs = lat.coords[:, 0].tolist()
    ys = lat.coords[:, 1].tolist()
    n = len(xs)

    def run(lo: int, hi: int) -> list[float]:
        out = []
        for i in range(lo, hi):
            try:
                v = fn(xs[i], ys[i])
            except FieldEvalError as err:
                raise FieldEvalError(err.reason, err.subexpr, i) from None
            if not math.isfinite(v):
                raise FieldEvalError("non-finite value", to_text(e), i)
            out.append(v)
        return out

    workers = thread_count(threads)
    if workers == 1 or n < 2048:
        values = run(0, n)
    else:
        bounds = np.linspace(0, n, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds[:-1], bounds[1:]))
        values = [v for part in parts for v in part]
    return VertexFunction(lat, values)


def sup_norm(g: VertexFunction | np.ndarray) -> float:
    """Maximum absolute value over the sampled vertices."""
    v = g.values if isinstance(g, VertexFunction) else np.asarray(g)
    if v.size == 0:
        return 0.0
    return float(np.max(np.abs(v)))
