"""Growth-rate expressions: parsing, evaluation, symbolic partial derivatives.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom (('^' | '**') integer)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'
    integer:= ['-'|'+'] digits | '(' ['-'|'+'] digits ')'

Variables are ``u1 .. uN``; for ``N == 2`` the aliases ``u`` and ``v`` name
``u1`` and ``u2``, and for ``N == 1`` ``u`` names ``u1``.  Functions are
``exp`` and ``log``.  Extra named constants may be bound at parse time.
"""
import re
from dataclasses import dataclass

import numpy as np

from .errors import CompetitionError


class ExprSyntaxError(CompetitionError, ValueError):
    def __init__(self, message, position):
        super().__init__(f"{message} at position {position}")
        self.position = position


class ExprDomainError(CompetitionError, ValueError):
    """Evaluation left the domain of an operation (log of nonpositive, x/0)."""


# --- nodes -----------------------------------------------------------------

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str  # one of + - * /
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    func: str  # exp | log
    arg: Node


FUNCTIONS = ("exp", "log")


@dataclass(frozen=True)
class Expr:
    """A parsed expression over ``num_vars`` variables."""

    root: Node
    num_vars: int

    def __call__(self, *point):
        return evaluate(self, point)

    def diff(self, var):
        return differentiate(self, var)

    def __str__(self):
        return to_text(self)


# --- constant-folding constructors ------------------------------------------

def _is(node, value):
    return isinstance(node, Const) and node.value == value


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if _is(a, 0.0) or _is(b, 0.0):
        return Const(0.0)
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if _is(a, -1.0):
        return _neg(b)
    if _is(b, -1.0):
        return _neg(a)
    return BinOp("*", a, b)


def _div(a, b):
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if _is(a, 0.0):
        return Const(0.0)
    if _is(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(a, n):
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    if isinstance(a, Const) and (a.value != 0.0 or n > 0):
        return Const(a.value ** n)
    return Pow(a, n)


# --- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


def _variable_names(num_vars):
    names = {f"u{i + 1}": i for i in range(num_vars)}
    if num_vars == 1:
        names["u"] = 0
    elif num_vars == 2:
        names["u"] = 0
        names["v"] = 1
    return names


class _Parser:
    def __init__(self, text, num_vars, params):
        self.tokens = _tokenize(text)
        self.i = 0
        self.num_vars = num_vars
        self.vars = _variable_names(num_vars)
        self.params = dict(params or {})

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in ("-", "+"):
            self.take()
            arg = self.unary()
            return Neg(arg) if text == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text in ("^", "**"):
            self.take()
            return Pow(base, self.integer())
        return base

    def integer(self):
        paren = False
        if self.peek()[1] == "(":
            self.take()
            paren = True
        sign = 1
        if self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        kind, text, pos = self.take()
        if kind != "num" or not text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", pos)
        if paren:
            self.expect(")")
        return sign * int(text)

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in self.vars:
                return Var(self.vars[text])
            if text in self.params:
                return Const(float(self.params[text]))
            m = re.fullmatch(r"u(\d+)", text)
            if m:
                raise ExprSyntaxError(f"variable {text} out of range for {self.num_vars} variables", pos)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            raise ExprSyntaxError("unexpected end of input", pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)


def parse(text, num_vars, params=None):
    """Parse ``text`` into an :class:`Expr` over ``num_vars`` variables.

    ``params`` maps extra identifiers to constant values.
    """
    if num_vars < 1:
        raise ValueError("num_vars must be >= 1")
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return Expr(_Parser(text, num_vars, params).parse(), num_vars)


# --- evaluation ---------------------------------------------------------------

def _check(value, what):
    if not np.all(np.isfinite(value)):
        raise ExprDomainError(f"{what} produced a non-finite value")
    return value


def _eval(node, point):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return point[node.index]
    if isinstance(node, Neg):
        return -_eval(node.arg, point)
    if isinstance(node, BinOp):
        a = _eval(node.left, point)
        b = _eval(node.right, point)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise ExprDomainError("division by zero")
        return a / b
    if isinstance(node, Pow):
        b = _eval(node.base, point)
        if node.exponent < 0 and np.any(np.asarray(b) == 0):
            raise ExprDomainError("zero raised to a negative power")
        return _check(np.power(b, float(node.exponent)), "power")
    if isinstance(node, Call):
        a = _eval(node.arg, point)
        if node.func == "exp":
            return _check(np.exp(a), "exp")
        if np.any(np.asarray(a) <= 0):
            raise ExprDomainError("log of a nonpositive value")
        return np.log(a)
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(expr, point):
    """Evaluate at ``point`` (length ``num_vars``); entries may be arrays."""
    if len(point) != expr.num_vars:
        raise ValueError(f"expected {expr.num_vars} coordinates, got {len(point)}")
    with np.errstate(over="ignore", invalid="ignore"):
        value = _eval(expr.root, point)
    value = _check(value, "expression")
    if isinstance(value, np.ndarray):
        return value
    shape = np.broadcast_shapes(*(np.shape(p) for p in point))
    return np.full(shape, float(value)) if shape else float(value)


# --- differentiation -------------------------------------------------------

def _d(node, var):
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.index == var else 0.0)
    if isinstance(node, Neg):
        return _neg(_d(node.arg, var))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _d(a, var), _d(b, var)
        if node.op == "+":
            return _add(da, db)
        if node.op == "-":
            return _sub(da, db)
        if node.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        # (a/b)' = a'/b - a b' / b^2
        return _sub(_div(da, b), _div(_mul(a, db), _pow(b, 2)))
    if isinstance(node, Pow):
        n = node.exponent
        return _mul(_mul(Const(float(n)), _pow(node.base, n - 1)), _d(node.base, var))
    if isinstance(node, Call):
        inner = _d(node.arg, var)
        if node.func == "exp":
            return _mul(node, inner)
        return _div(inner, node.arg)
    raise TypeError(f"not an expression node: {node!r}")


def differentiate(expr, var):
    """Symbolic partial derivative with respect to variable ``var`` (0-based)."""
    if not 0 <= var < expr.num_vars:
        raise ValueError(f"variable index {var} out of range")
    return Expr(_d(expr.root, var), expr.num_vars)


def restrict(expr, var, fixed):
    """One-variable section ``s -> expr(fixed[0], .., s, .., fixed[N-1])``.

    ``fixed`` supplies the frozen values of the other variables (the entry at
    ``var`` is ignored).
    """

    def sub(node):
        if isinstance(node, Var):
            return Var(0) if node.index == var else Const(float(fixed[node.index]))
        if isinstance(node, Const):
            return node
        if isinstance(node, Neg):
            return _neg(sub(node.arg))
        if isinstance(node, BinOp):
            return {"+": _add, "-": _sub, "*": _mul, "/": _div}[node.op](sub(node.left), sub(node.right))
        if isinstance(node, Pow):
            return _pow(sub(node.base), node.exponent)
        if isinstance(node, Call):
            return Call(node.func, sub(node.arg))
        raise TypeError(f"not an expression node: {node!r}")

    return Expr(sub(expr.root), 1)


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _fmt_const(value):
    text = repr(float(value))
    return f"({text})" if value < 0 or text.startswith("-") else text


def _text(node, names):
    """Return ``(text, precedence)``; precedence 4 is atomic."""
    if isinstance(node, Const):
        return _fmt_const(node.value), 4
    if isinstance(node, Var):
        return names[node.index], 4
    if isinstance(node, Call):
        return f"{node.func}({_text(node.arg, names)[0]})", 4
    if isinstance(node, Pow):
        base, p = _text(node.base, names)
        if p < 4:
            base = f"({base})"
        exp = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"{base}^{exp}", 3
    if isinstance(node, Neg):
        arg, p = _text(node.arg, names)
        if p < 3:
            arg = f"({arg})"
        return f"-{arg}", 2.5
    prec = _PREC[node.op]
    left, lp = _text(node.left, names)
    right, rp = _text(node.right, names)
    if lp < prec:
        left = f"({left})"
    # left-associative: the right operand needs parentheses at equal precedence
    if rp <= prec:
        right = f"({right})"
    return f"{left} {node.op} {right}", prec


def to_text(expr):
    """Canonical text that :func:`parse` maps back to an equal-valued tree."""
    names = [f"u{i + 1}" for i in range(expr.num_vars)]
    return _text(expr.root, names)[0]
