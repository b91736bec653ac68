"""
Closed-form potentials: parsing, printing, evaluation and affine pullback.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (("+"|"-") term)*
    term   := unary (("*"|"/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"
    VAR    := "x" DIGITS
    FUNC   := exp | log | sqrt | sin | cos | sinh | cosh

Evaluation is generic: arguments may be floats or :class:`~hessianlab.jets.Jet`
objects, and the result is of the same kind.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    DivisionByZeroValuePart,
    DomainError,
    ExprSyntaxError,
    SingularMatrix,
    UnknownIdentifier,
    VariableOutOfRange,
)
from .jets import Jet, elementary, int_power

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "sinh", "cosh")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a FUNCTIONS name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # add, sub, mul, div
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    """Integer power; non-integer exponents are rewritten to exp(e*log(b))."""

    base: "Node"
    exponent: int


Node = Union[Const, Var, Unary, Binary, Pow]


@dataclass(frozen=True)
class Ast:
    root: Node
    n: int

    def __str__(self):
        return to_string(self)

    def __call__(self, *args):
        return evaluate(self, args)


@dataclass(frozen=True)
class Domain:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if not lo or len(lo) != len(hi):
            raise ValueError("domain bounds must be nonempty and of equal length")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise ValueError("domain bounds must be finite")
            if not a < b:
                raise ValueError(f"empty domain axis: lo={a} >= hi={b}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def n(self):
        return len(self.lo)

    def contains(self, point):
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lo) and np.all(point <= self.hi))

    @classmethod
    def cube(cls, n, lo, hi):
        return cls((lo,) * n, (hi,) * n)


@dataclass(frozen=True)
class Potential:
    """A potential f: an expression in x1..xn together with the box it lives on."""

    ast: Ast
    domain: Domain
    source: str = field(default="", compare=False)

    def __post_init__(self):
        if self.ast.n != self.domain.n:
            raise ValueError(f"expression dimension {self.ast.n} != domain dimension {self.domain.n}")
        if not self.source:
            object.__setattr__(self, "source", to_string(self.ast))

    @property
    def n(self):
        return self.ast.n

    @classmethod
    def from_string(cls, source, domain):
        return cls(parse(source, domain.n), domain, source)

    def __call__(self, *args):
        return evaluate(self.ast, args)


# -- parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    pos = 0
    tokens = []
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(pos, {"number", "variable", "function", "operator"}, source)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, n):
        self.source = source
        self.n = n
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, val, pos = self.peek()
        if val != text or kind != "op":
            raise ExprSyntaxError(pos, {text}, self.source)
        self.advance()

    def parse(self):
        node = self.expr()
        kind, _, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(pos, {"+", "-", "*", "/", "^", "end of input"}, self.source)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = "add" if self.advance()[1] == "+" else "sub"
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = "mul" if self.advance()[1] == "*" else "div"
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            return _make_pow(base, self.unary())
        return base

    def atom(self):
        kind, val, pos = self.advance()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if re.fullmatch(r"x\d+", val):
                idx = int(val[1:])
                if not 1 <= idx <= self.n:
                    raise VariableOutOfRange(idx, self.n)
                return Var(idx)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(val, arg)
            raise UnknownIdentifier(val, pos)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(pos, {"number", "variable", "function", "("}, self.source)


def _constant_value(node):
    """Value of a variable-free subtree, or None."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return None
    if isinstance(node, Unary):
        v = _constant_value(node.arg)
        return None if v is None else _eval_node(node, ())
    if isinstance(node, Pow):
        return None if _constant_value(node.base) is None else _eval_node(node, ())
    l, r = _constant_value(node.left), _constant_value(node.right)
    return None if l is None or r is None else _eval_node(node, ())


def _make_pow(base, exponent):
    try:
        e = _constant_value(exponent)
    except (DomainError, ArithmeticError):
        e = None
    if e is not None and float(e).is_integer() and abs(e) <= 1024:
        return Pow(base, int(e))
    return Unary("exp", Binary("mul", exponent, Unary("log", base)))


def parse(source: str, n: int) -> Ast:
    """Parse ``source`` into an :class:`Ast` over variables x1..xn."""
    if n < 1:
        raise ValueError("dimension must be positive")
    return Ast(_Parser(source, n).parse(), n)


# -- printing --------------------------------------------------------------

_BINOP = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _fmt(node):
    if isinstance(node, Const):
        s = repr(float(node.value))
        return f"({s})" if node.value < 0 else s
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{_fmt(node.arg)})"
        return f"{node.op}({_fmt(node.arg)})"
    if isinstance(node, Pow):
        return f"({_fmt(node.base)}^({node.exponent}))"
    return f"({_fmt(node.left)} {_BINOP[node.op]} {_fmt(node.right)})"


def to_string(ast: Ast) -> str:
    """Fully parenthesised source text that reparses to an equivalent tree."""
    return _fmt(ast.root)


# -- evaluation ------------------------------------------------------------


def _eval_node(node, args):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return args[node.index - 1]
    if isinstance(node, Binary):
        a = _eval_node(node.left, args)
        b = _eval_node(node.right, args)
        if node.op == "add":
            return a + b
        if node.op == "sub":
            return a - b
        if node.op == "mul":
            return a * b
        bv = b.value if isinstance(b, Jet) else b
        if bv == 0.0:
            raise DomainError(_fmt(node), "division by zero value part")
        return a / b
    if isinstance(node, Pow):
        b = _eval_node(node.base, args)
        if node.exponent < 0 and (b.value if isinstance(b, Jet) else b) == 0.0:
            raise DomainError(_fmt(node), "negative power of zero")
        if isinstance(b, Jet):
            return b ** node.exponent
        p = int_power(float(b), abs(node.exponent))
        return 1.0 / p if node.exponent < 0 else p
    a = _eval_node(node.arg, args)
    if node.op == "neg":
        return -a
    try:
        return elementary(node.op, a)
    except DomainError as exc:
        raise DomainError(_fmt(node), exc.reason) from None


def evaluate(ast: Ast, args: Sequence):
    """Evaluate ``ast`` with ``args`` (floats or jets, one per variable)."""
    if len(args) != ast.n:
        raise ValueError(f"expected {ast.n} arguments, got {len(args)}")
    try:
        return _eval_node(ast.root, tuple(args))
    except DivisionByZeroValuePart as exc:
        raise DomainError(to_string(ast), str(exc)) from None


# -- affine pullback -------------------------------------------------------


def _substitute(node, repl):
    if isinstance(node, Var):
        return repl[node.index - 1]
    if isinstance(node, Const):
        return node
    if isinstance(node, Unary):
        return Unary(node.op, _substitute(node.arg, repl))
    if isinstance(node, Pow):
        return Pow(_substitute(node.base, repl), node.exponent)
    return Binary(node.op, _substitute(node.left, repl), _substitute(node.right, repl))


def affine_pullback(ast: Ast, A, b, det_threshold=1e-12) -> Ast:
    """Expression for ``g(y) = f(A y + b)``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    n = ast.n
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"A must be {n}x{n} and b of length {n}")
    if abs(np.linalg.det(A)) < det_threshold:
        raise SingularMatrix(f"|det A| = {abs(np.linalg.det(A)):.3e} below {det_threshold}")
    repl = []
    for i in range(n):
        node = Const(float(b[i]))
        for j in range(n):
            if A[i, j] != 0.0:
                node = Binary("add", node, Binary("mul", Const(float(A[i, j])), Var(j + 1)))
        repl.append(node)
    return Ast(_substitute(ast.root, repl), n)
