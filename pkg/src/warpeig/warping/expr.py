"""Expression language for user-supplied warping functions.

Grammar (whitespace is ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?            # right associative
    atom   := NUMBER | 't' | 'pi' | NAME '(' expr (',' expr)* ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-t^2`` is ``-(t^2)``. There is no
implicit multiplication: ``2t`` is a parse error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParseError, UnbalancedParens, UnknownFunction

FUNCTIONS = {
    "sin": 1, "cos": 1, "sinh": 1, "cosh": 1, "exp": 1,
    "log": 1, "sqrt": 1, "tanh": 1, "pow": 2,
}
# Produced by the log-space rewrites below; never accepted by the parser.
INTERNAL_FUNCTIONS = {"lsinh": 1, "lcosh": 1, "coth": 1}

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


class Expr:
    """Base class of the immutable expression tree."""

    def __call__(self, t):
        with np.errstate(all="ignore"):
            return evaluate(self, t)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Const(Expr):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    def __repr__(self):
        return "Var(t)"


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr

    def __repr__(self):
        return f"Neg({self.arg!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expr):
    left: Expr
    right: Expr
    op = "?"

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(Binary):
    op = "+"


class Sub(Binary):
    op = "-"


class Mul(Binary):
    op = "*"


class Div(Binary):
    op = "/"


class Pow(Binary):
    op = "^"


@dataclass(frozen=True, repr=False)
class Func(Expr):
    name: str
    args: tuple

    def __repr__(self):
        return f"Func({self.name}, {', '.join(map(repr, self.args))})"


T = Var()
_BINARY = {"+": Add, "-": Sub, "*": Mul, "/": Div, "^": Pow}


# --------------------------------------------------------------------------
# Parsing

def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            literal = text[i:j]
            try:
                value = float(literal)
            except ValueError:
                raise ParseError(f"malformed number {literal!r}", i) from None
            tokens.append(("num", value, i))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
        elif ch in "+-*/^(),":
            tokens.append((ch, ch, i))
            i += 1
        elif ch == "−":
            tokens.append(("-", "-", i))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.depth = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, expected):
        tok = self.peek()
        if tok[0] != kind:
            if kind == ")":
                raise UnbalancedParens("missing ')'", tok[2], expected)
            raise ParseError(f"unexpected {self._describe(tok)}", tok[2], expected)
        return self.take()

    @staticmethod
    def _describe(tok):
        return "end of input" if tok[0] == "end" else f"{tok[1]!r}"

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] == ")":
            raise UnbalancedParens("unmatched ')'", tok[2])
        if tok[0] != "end":
            raise ParseError(
                f"unexpected {self._describe(tok)}", tok[2],
                {"+", "-", "*", "/", "^", "end of input"},
            )
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = _BINARY[op](node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = _BINARY[op](node, self.unary())
        return node

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.take()
            return Pow(base, self.unary())
        return base

    def atom(self):
        tok = self.peek()
        kind = tok[0]
        if kind == "num":
            self.take()
            return Const(tok[1])
        if kind == "(":
            self.take()
            node = self.expr()
            self.expect(")", {")", "+", "-", "*", "/", "^"})
            return node
        if kind == "name":
            self.take()
            name = tok[1]
            if self.peek()[0] != "(":
                if name == "t":
                    return T
                if name == "pi":
                    return Const(math.pi)
                if name in FUNCTIONS:
                    raise ParseError(f"function {name!r} needs an argument list", self.peek()[2], {"("})
                raise ParseError(f"unknown identifier {name!r}", tok[2], {"t", "pi", "number", "function"})
            if name not in FUNCTIONS:
                raise UnknownFunction(f"unknown function {name!r}", tok[2], set(FUNCTIONS))
            self.take()
            args = [self.expr()]
            while self.peek()[0] == ",":
                self.take()
                args.append(self.expr())
            self.expect(")", {")", ","})
            if len(args) != FUNCTIONS[name]:
                raise ParseError(f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}", tok[2])
            if name == "pow":
                return Pow(args[0], args[1])
            return Func(name, tuple(args))
        if kind == ")":
            raise UnbalancedParens("unmatched ')'", tok[2])
        raise ParseError(f"unexpected {self._describe(tok)}", tok[2], {"number", "t", "pi", "function", "(", "-"})


def parse_warping(text):
    """Parse ``text`` into an expression tree."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0, {"number", "t", "function", "(", "-"})
    return _Parser(text).parse()


# --------------------------------------------------------------------------
# Evaluation and printing

def _lsinh(x):
    ax = np.abs(x)
    return ax + np.log1p(-np.exp(-2 * ax)) - math.log(2.0)


def _lcosh(x):
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2 * ax)) - math.log(2.0)


_NUMPY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
    "exp": np.exp, "log": np.log, "sqrt": np.sqrt, "tanh": np.tanh,
    "lsinh": _lsinh, "lcosh": _lcosh, "coth": lambda x: 1.0 / np.tanh(x),
}


def evaluate(node, t):
    """Evaluate ``node`` at ``t`` (float or numpy array)."""
    if isinstance(node, Const):
        return node.value + 0.0 * t
    if isinstance(node, Var):
        return t + 0.0
    if isinstance(node, Neg):
        return -evaluate(node.arg, t)
    if isinstance(node, Binary):
        a, b = evaluate(node.left, t), evaluate(node.right, t)
        if isinstance(node, Add):
            return a + b
        if isinstance(node, Sub):
            return a - b
        if isinstance(node, Mul):
            return a * b
        if isinstance(node, Div):
            return a / b
        return np.power(a, b)
    if isinstance(node, Func):
        return _NUMPY_FUNCS[node.name](evaluate(node.args[0], t))
    raise TypeError(f"not an expression node: {node!r}")


def _prec(node):
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    if isinstance(node, Const) and node.value < 0:
        return 3
    return 5


def to_string(node):
    """Render ``node`` so that :func:`parse_warping` rebuilds the same tree."""
    if isinstance(node, Const):
        v = node.value
        return repr(v) if v >= 0 else f"-{-v!r}"
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Neg):
        inner = to_string(node.arg)
        return f"-({inner})" if _prec(node.arg) < 4 else f"-{inner}"
    if isinstance(node, Func):
        return f"{node.name}({', '.join(to_string(a) for a in node.args)})"
    p = _PREC[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
    else:
        if _prec(node.left) < p:
            left = f"({left})"
        # Left associativity: equal precedence on the right needs brackets.
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left} {node.op} {right}"


# --------------------------------------------------------------------------
# Symbolic differentiation with constant folding

def _is(node, value):
    return isinstance(node, Const) and node.value == value


def add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    return Add(a, b)


def sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    return Sub(a, b)


def mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0) or _is(b, 0):
        return Const(0.0)
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    return Mul(a, b)


def div(a, b):
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0:
        return Const(a.value / b.value)
    if _is(a, 0):
        return Const(0.0)
    if _is(b, 1):
        return a
    return Div(a, b)


def power(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value ** b.value)
    if _is(b, 1):
        return a
    if _is(b, 0):
        return Const(1.0)
    return Pow(a, b)


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def func(name, arg):
    return Func(name, (arg,))


def differentiate(node):
    """d/dt of ``node``. Only constant folding is applied to the result."""
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0)
    if isinstance(node, Neg):
        return neg(differentiate(node.arg))
    if isinstance(node, (Add, Sub)):
        combine = add if isinstance(node, Add) else sub
        return combine(differentiate(node.left), differentiate(node.right))
    if isinstance(node, Mul):
        a, b = node.left, node.right
        return add(mul(differentiate(a), b), mul(a, differentiate(b)))
    if isinstance(node, Div):
        a, b = node.left, node.right
        return div(sub(mul(differentiate(a), b), mul(a, differentiate(b))), power(b, Const(2.0)))
    if isinstance(node, Pow):
        a, b = node.left, node.right
        da, db = differentiate(a), differentiate(b)
        if isinstance(b, Const):
            return mul(mul(b, power(a, Const(b.value - 1))), da)
        # a^b * (b' log a + b a'/a)
        return mul(node, add(mul(db, func("log", a)), div(mul(b, da), a)))
    if isinstance(node, Func):
        a = node.args[0]
        da = differentiate(a)
        name = node.name
        if name == "sin":
            outer = func("cos", a)
        elif name == "cos":
            outer = neg(func("sin", a))
        elif name == "sinh":
            outer = func("cosh", a)
        elif name == "cosh":
            outer = func("sinh", a)
        elif name == "exp":
            outer = node
        elif name == "log":
            return div(da, a)
        elif name == "sqrt":
            return div(da, mul(Const(2.0), node))
        elif name == "tanh":
            outer = sub(Const(1.0), power(node, Const(2.0)))
        elif name == "lsinh":
            outer = func("coth", a)
        elif name == "lcosh":
            outer = func("tanh", a)
        elif name == "coth":
            outer = sub(Const(1.0), power(node, Const(2.0)))
        else:
            raise ValueError(f"no derivative rule for {name}")
        return mul(outer, da)
    raise TypeError(f"not an expression node: {node!r}")


# --------------------------------------------------------------------------
# Log-space rewrites: log|f| and f'/f without forming f itself

def log_abs(node):
    """Expression for log|f| that avoids overflow of products and exponentials.

    Sums and other unsplit nodes fall back to log(f), which needs f > 0.
    """
    if isinstance(node, Const):
        return Const(math.log(abs(node.value))) if node.value != 0 else Const(-math.inf)
    if isinstance(node, Var):
        return func("log", node)
    if isinstance(node, Neg):
        return log_abs(node.arg)
    if isinstance(node, Mul):
        return add(log_abs(node.left), log_abs(node.right))
    if isinstance(node, Div):
        return sub(log_abs(node.left), log_abs(node.right))
    if isinstance(node, Pow) and isinstance(node.right, Const):
        return mul(node.right, log_abs(node.left))
    if isinstance(node, Func):
        a = node.args[0]
        if node.name == "exp":
            return a
        if node.name == "sinh":
            return func("lsinh", a)
        if node.name == "cosh":
            return func("lcosh", a)
        if node.name == "sqrt":
            return mul(Const(0.5), log_abs(a))
    return func("log", node)


def log_derivative(node):
    """Expression for f'/f, distributed over products so it stays finite."""
    if isinstance(node, Var):
        return div(Const(1.0), node)
    if isinstance(node, Neg):
        return log_derivative(node.arg)
    if isinstance(node, Mul):
        return add(log_derivative(node.left), log_derivative(node.right))
    if isinstance(node, Div):
        return sub(log_derivative(node.left), log_derivative(node.right))
    if isinstance(node, Pow) and isinstance(node.right, Const):
        return mul(node.right, log_derivative(node.left))
    if isinstance(node, Func):
        a = node.args[0]
        if node.name == "exp":
            return differentiate(a)
        if node.name == "sinh":
            return mul(func("coth", a), differentiate(a))
        if node.name == "cosh":
            return mul(func("tanh", a), differentiate(a))
        if node.name == "sqrt":
            return mul(Const(0.5), log_derivative(a))
    if isinstance(node, Const):
        return Const(0.0)
    return div(differentiate(node), node)
