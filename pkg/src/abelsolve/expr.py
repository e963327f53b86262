"""Inhomogeneity expressions: parsing, evaluation and order classification.

Grammar (precedence from loosest to tightest)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | 'x' | CONST | FUNC '(' expr ')' | '(' expr ')'

Constants are symbolic (A, B, S, C) and are bound only at evaluation time,
so a single parsed expression serves a whole parameter sweep.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

from .errors import (
    ClassificationAmbiguousError,
    DomainError,
    ExpressionSyntaxError,
    UnboundConstantError,
    UnknownIdentifierError,
)

CONSTANTS = frozenset({"A", "B", "S", "C"})
FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "abs", "sqrt")

# precedence levels used by the serializer
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


class Node:
    """Base class of expression tree nodes (immutable)."""

    prec = _PREC_ATOM

    def __str__(self):
        return serialize(self)

    def constants(self) -> frozenset[str]:
        return frozenset()


@dataclass(frozen=True)
class Num(Node):
    value: float

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True)
class Var(Node):
    def __repr__(self):
        return "x"


@dataclass(frozen=True)
class Const(Node):
    name: str

    def __repr__(self):
        return self.name

    def constants(self):
        return frozenset({self.name})


@dataclass(frozen=True)
class Neg(Node):
    operand: Node
    prec = _PREC_NEG

    def __repr__(self):
        return f"Neg({self.operand!r})"

    def constants(self):
        return self.operand.constants()


@dataclass(frozen=True)
class BinOp(Node):
    left: Node
    right: Node
    symbol = "?"

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"

    def constants(self):
        return self.left.constants() | self.right.constants()


class Add(BinOp):
    symbol, prec = "+", _PREC_ADD


class Sub(BinOp):
    symbol, prec = "-", _PREC_ADD


class Mul(BinOp):
    symbol, prec = "*", _PREC_MUL


class Div(BinOp):
    symbol, prec = "/", _PREC_MUL


class Pow(BinOp):
    symbol, prec = "^", _PREC_POW


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node

    def __repr__(self):
        return f"{self.func}({self.arg!r})"

    def constants(self):
        return self.arg.constants()


Expression = Node

_BINOPS = {"+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow}


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            found = "end of input" if kind == "end" else repr(val)
            raise ExpressionSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected token {val!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINOPS[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = _BINOPS[op](node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Pow(base, self.unary())
        return base

    def primary(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if val == "x":
                return Var()
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos)
        if (kind, val) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExpressionSyntaxError(f"unexpected {found}", pos)


def parse_expression(text: str) -> Node:
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt_number(v):
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def serialize(node: Node) -> str:
    """Render ``node`` with the minimal parentheses that re-parse to the same tree."""
    if isinstance(node, Num):
        s = _fmt_number(node.value)
        return f"({s})" if node.value < 0 or s.startswith("-") else s
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({serialize(node.arg)})"
    if isinstance(node, Neg):
        inner = serialize(node.operand)
        if node.operand.prec < _PREC_NEG:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Pow):
        left, right = serialize(node.left), serialize(node.right)
        if node.left.prec <= _PREC_POW:
            left = f"({left})"
        if node.right.prec < _PREC_NEG:
            right = f"({right})"
        return f"{left}^{right}"
    if isinstance(node, BinOp):
        left, right = serialize(node.left), serialize(node.right)
        if node.left.prec < node.prec:
            left = f"({left})"
        if node.right.prec <= node.prec:
            right = f"({right})"
        return f"{left} {node.symbol} {right}"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _check(value, what):
    if not math.isfinite(value):
        raise DomainError(f"{what} is not finite")
    return value


def _div(a, b):
    if b == 0.0:
        raise DomainError("division by zero")
    return a / b


def _pow(a, b):
    if a == 0.0 and b < 0:
        raise DomainError("zero raised to a negative power")
    if a < 0 and not float(b).is_integer():
        raise DomainError("negative base with non-integer exponent")
    try:
        return math.pow(a, b)
    except OverflowError:
        raise DomainError("power overflow") from None


def _ln(a):
    if a <= 0.0:
        raise DomainError(f"ln of non-positive argument {a!r}")
    return math.log(a)


def _sqrt(a):
    if a < 0.0:
        raise DomainError(f"sqrt of negative argument {a!r}")
    return math.sqrt(a)


def _exp(a):
    try:
        return math.exp(a)
    except OverflowError:
        raise DomainError(f"exp overflow at {a!r}") from None


_FUNC_IMPL = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": _exp,
    "ln": _ln,
    "abs": abs,
    "sqrt": _sqrt,
}

_OP_IMPL = {
    Add: lambda a, b: a + b,
    Sub: lambda a, b: a - b,
    Mul: lambda a, b: a * b,
    Div: _div,
    Pow: _pow,
}


def _build(node, env):
    if isinstance(node, Num):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        return lambda x: x
    if isinstance(node, Const):
        try:
            v = float(env[node.name])
        except KeyError:
            raise UnboundConstantError(f"constant {node.name!r} is not bound") from None
        return lambda x: v
    if isinstance(node, Neg):
        f = _build(node.operand, env)
        return lambda x: -f(x)
    if isinstance(node, Call):
        f, g = _FUNC_IMPL[node.func], _build(node.arg, env)
        return lambda x: f(g(x))
    if isinstance(node, BinOp):
        op = _OP_IMPL[type(node)]
        lf, rf = _build(node.left, env), _build(node.right, env)
        return lambda x: op(lf(x), rf(x))
    raise TypeError(f"not an expression node: {node!r}")


def compile_expression(e: Node, bindings: Mapping[str, float] | None = None) -> Callable[[float], float]:
    """Return a fast scalar callable ``f(x)`` with the constants of ``e`` bound.

    The callable raises :class:`DomainError` instead of returning inf/NaN.
    """
    raw = _build(e, bindings or {})

    def f(x):
        try:
            return _check(raw(float(x)), "expression value")
        except (OverflowError, ZeroDivisionError, ValueError) as exc:
            raise DomainError(str(exc)) from None

    return f


def evaluate(e: Node, x: float, bindings: Mapping[str, float] | None = None) -> float:
    return compile_expression(e, bindings)(x)


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


class BaseKind(str, Enum):
    POLYNOMIAL = "polynomial-in-x"
    LOGARITHM = "logarithm"
    EXPONENTIAL = "exponential"
    TRIGONOMETRIC = "trigonometric"
    RATIONAL = "rational"
    MIXED = "mixed"


@dataclass(frozen=True)
class InhomogeneityClass:
    """Base-function kind and order of an inhomogeneity ``Q = [f(x)]^n``.

    For the rational kind ``Q = [f]^m / [f]^k``, ``base`` names the kind of
    ``f`` and ``n = m - k`` may be below one.
    """

    kind: BaseKind
    n: int
    m: int | None = None
    k: int | None = None
    base: BaseKind | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BaseKind(self.kind))
        if self.base is not None:
            object.__setattr__(self, "base", BaseKind(self.base))
        if self.kind is BaseKind.RATIONAL:
            if self.m is None or self.k is None:
                raise ValueError("rational class needs both m and k")
            if self.m < 0 or self.k < 1:
                raise ValueError("rational class needs m >= 0 and k >= 1")
            if self.n != self.m - self.k:
                raise ValueError("rational class needs n = m - k")
            if self.base in (BaseKind.RATIONAL, BaseKind.MIXED):
                raise ValueError("rational base must be a concrete base function kind")
        elif self.n < 1:
            raise ValueError(f"order must be >= 1, got {self.n}")

    @classmethod
    def rational(cls, m, k, base=BaseKind.POLYNOMIAL):
        return cls(BaseKind.RATIONAL, m - k, m=m, k=k, base=base)


_FUNC_KIND = {
    "exp": BaseKind.EXPONENTIAL,
    "ln": BaseKind.LOGARITHM,
    "sin": BaseKind.TRIGONOMETRIC,
    "cos": BaseKind.TRIGONOMETRIC,
    "tan": BaseKind.TRIGONOMETRIC,
}
_MAX_TERMS = 256


class _Opaque(Exception):
    pass


# A monomial maps base kind -> (numerator power, denominator power); an
# expression is a list of monomials. Numeric and constant factors are dropped.


def _mono_mul(a, b):
    out = dict(a)
    for kind, (num, den) in b.items():
        n0, d0 = out.get(kind, (0, 0))
        out[kind] = (n0 + num, d0 + den)
    return out


def _mono_pow(a, p):
    if p >= 0:
        return {kind: (num * p, den * p) for kind, (num, den) in a.items()}
    return {kind: (den * -p, num * -p) for kind, (num, den) in a.items()}


def _terms(node):
    if isinstance(node, (Num, Const)):
        return [{}]
    if isinstance(node, Var):
        return [{BaseKind.POLYNOMIAL: (1, 0)}]
    if isinstance(node, Neg):
        return _terms(node.operand)
    if isinstance(node, (Add, Sub)):
        return _terms(node.left) + _terms(node.right)
    if isinstance(node, Mul):
        left, right = _terms(node.left), _terms(node.right)
        if len(left) * len(right) > _MAX_TERMS:
            raise _Opaque
        return [_mono_mul(a, b) for a in left for b in right]
    if isinstance(node, Div):
        right = _terms(node.right)
        if len(right) != 1:
            raise _Opaque
        return [_mono_mul(a, _mono_pow(right[0], -1)) for a in _terms(node.left)]
    if isinstance(node, Pow):
        p = _literal(node.right)
        if p is None:
            if not _terms_nonconstant(node.left) and _terms_nonconstant(node.right):
                # constant ** f(x) behaves like an exponential of degree one
                return [{BaseKind.EXPONENTIAL: (1, 0)}]
            if not _terms_nonconstant(node.left):
                return [{}]
            raise _Opaque
        if not float(p).is_integer():
            raise _Opaque
        p = int(p)
        base = _terms(node.left)
        if len(base) == 1:
            return [_mono_pow(base[0], p)]
        if p < 0 or p > 8:
            raise _Opaque
        out = [{}]
        for _ in range(p):
            out = [_mono_mul(a, b) for a in out for b in base]
            if len(out) > _MAX_TERMS:
                raise _Opaque
        return out
    if isinstance(node, Call):
        if node.func in _FUNC_KIND:
            if not _terms_nonconstant(node.arg):
                return [{}]
            return [{_FUNC_KIND[node.func]: (1, 0)}]
        inner = _terms(node.arg)
        if len(inner) != 1:
            raise _Opaque
        if node.func == "abs":
            return inner
        # sqrt of a single monomial halves its powers; only integral results survive
        mono = {}
        for kind, (num, den) in inner[0].items():
            if num % 2 or den % 2:
                raise _Opaque
            mono[kind] = (num // 2, den // 2)
        return [mono]
    raise _Opaque


def _terms_nonconstant(node):
    return any(isinstance(n, Var) for n in _walk(node))


def _walk(node):
    yield node
    if isinstance(node, Neg):
        yield from _walk(node.operand)
    elif isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, Call):
        yield from _walk(node.arg)


def _literal(node):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Num):
        return -node.operand.value
    return None


def _classify_kind(kind, powers):
    """Classify the monomial powers of one base kind."""
    nets = [num - den for num, den in powers]
    if all(den == 0 for _, den in powers):
        return InhomogeneityClass(kind, max(nets))
    if len(powers) == 1:
        num, den = powers[0]
        return InhomogeneityClass.rational(num, den, base=kind)
    raise ClassificationAmbiguousError(
        f"sum of quotients of {kind.value} powers has no single order; supply an override"
    )


def classify_inhomogeneity(
    e: Node, override: InhomogeneityClass | None = None
) -> InhomogeneityClass:
    """Determine the base-function kind and order of ``Q``.

    Sums of powers of one base give that base with ``n`` the highest power;
    a single quotient ``[f]^m / [f]^k`` gives the rational kind; when several
    bases appear, the base with the greatest degree wins. Anything else
    raises :class:`ClassificationAmbiguousError`.
    """
    if override is not None:
        return override
    try:
        monos = _terms(e)
    except _Opaque:
        raise ClassificationAmbiguousError(
            f"cannot reduce {serialize(e)!r} to powers of base functions; supply an override"
        ) from None

    by_kind: dict[BaseKind, list[tuple[int, int]]] = {}
    for mono in monos:
        for kind, (num, den) in mono.items():
            if (num, den) != (0, 0):
                by_kind.setdefault(kind, []).append((num, den))
    if not by_kind:
        raise ClassificationAmbiguousError("constant inhomogeneity has no order")
    if len(by_kind) == 1:
        (kind, powers), = by_kind.items()
        return _classify_kind(kind, powers)

    degree = {kind: max(num - den for num, den in powers) for kind, powers in by_kind.items()}
    top = max(degree.values())
    winners = [kind for kind, d in degree.items() if d == top]
    if len(winners) > 1:
        names = ", ".join(sorted(k.value for k in winners))
        raise ClassificationAmbiguousError(f"bases {names} tie at degree {top}; supply an override")
    return _classify_kind(winners[0], by_kind[winners[0]])
