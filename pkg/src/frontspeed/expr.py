"""Arithmetic expressions in one variable: parsing, evaluation, differentiation.

Grammar (whitespace insignificant):

    expr    := term (('+'|'-') term)*
    term    := factor (('*'|'/') factor)*
    factor  := unary ('^' factor)?          # '^' right-associative
    unary   := '-' unary | primary
    primary := number | variable | func '(' expr ')' | '(' expr ')' | 'pi' | 'e'

Known functions: sin, cos, exp, log, sqrt.  Trees are immutable; evaluation
either returns a finite float or raises DomainError (NaN/Inf never escape).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

__all__ = [
    "ExprTree", "ExprSyntaxError", "DomainError",
    "parse", "evaluate", "differentiate", "to_source", "compile_fn",
]

_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
_CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the character offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log/sqrt/pow/division) or overflowed."""


# ---------------------------------------------------------------------------
# nodes

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


@dataclass(frozen=True)
class ExprTree:
    """Immutable parsed expression in a single named variable."""

    root: object
    variable: str

    def __call__(self, x):
        return evaluate(self, x)


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
    r"|\d+(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)

# typographic variants accepted silently
_TRANSLATE = str.maketrans({"−": "-", "×": "*", "÷": "/"})


def _tokenize(source):
    text = source.translate(_TRANSLATE)
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {stripped[0]!r}", at)
        at = m.start("num") if m.group("num") else (
            m.start("name") if m.group("name") else m.start("op"))
        if m.group("num"):
            tokens.append(("num", float(m.group("num")), at))
        elif m.group("name"):
            tokens.append(("name", m.group("name"), at))
        else:
            tokens.append(("op", m.group("op"), at))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, tokens, variable):
        self.tokens = tokens
        self.i = 0
        self.variable = variable

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, at = self.peek()
        if kind != "op" or val != op:
            raise ExprSyntaxError(f"expected {op!r}", at)
        self.advance()

    def parse_expr(self):
        node = self.parse_term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = _fold_bin(val, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = _fold_bin(val, node, self.parse_factor())
            else:
                return node

    def parse_factor(self):
        node = self.parse_unary()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            node = _fold_bin("^", node, self.parse_factor())
        return node

    def parse_unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return _fold_neg(self.parse_unary())
        return self.parse_primary()

    def parse_primary(self):
        kind, val, at = self.advance()
        if kind == "num":
            return Num(val)
        if kind == "name":
            nk, nv, _ = self.peek()
            if nk == "op" and nv == "(":
                if val not in _FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {val!r}", at)
                self.advance()
                inner = self.parse_expr()
                self.expect_op(")")
                return _fold_call(val, inner)
            if val in _CONSTANTS:
                return Num(_CONSTANTS[val])
            if val != self.variable:
                raise ExprSyntaxError(
                    f"unknown identifier {val!r} (variable is {self.variable!r})", at)
            return Var(val)
        if kind == "op" and val == "(":
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(
            f"expected number, variable or '(' but found {val!r}" if val
            else "unexpected end of expression", at)


def parse(source, variable):
    """Parse ``source`` into an ExprTree in the single variable ``variable``."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    if variable in _CONSTANTS or variable in _FUNCTIONS:
        raise ValueError(f"variable name {variable!r} collides with a builtin symbol")
    p = _Parser(_tokenize(source), variable)
    node = p.parse_expr()
    kind, val, at = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected trailing {val!r}", at)
    return ExprTree(node, variable)


# ---------------------------------------------------------------------------
# evaluation

def _check_finite(v):
    if not math.isfinite(v):
        raise DomainError("evaluation produced a non-finite value")
    return v


def _apply_op(op, a, b):
    if op == "+":
        return _check_finite(a + b)
    if op == "-":
        return _check_finite(a - b)
    if op == "*":
        return _check_finite(a * b)
    if op == "/":
        if b == 0.0:
            raise DomainError("division by zero")
        return _check_finite(a / b)
    # power: fractional exponent needs a positive base
    if a < 0.0 and b != math.floor(b):
        raise DomainError("fractional power of a negative base")
    if a == 0.0 and b < 0.0:
        raise DomainError("zero raised to a negative power")
    try:
        return _check_finite(math.pow(a, b))
    except (ValueError, OverflowError) as exc:
        raise DomainError(str(exc)) from exc


def _apply_fn(fn, x):
    try:
        if fn == "sin":
            return _check_finite(math.sin(x))
        if fn == "cos":
            return _check_finite(math.cos(x))
        if fn == "exp":
            return _check_finite(math.exp(x))
        if fn == "log":
            if x <= 0.0:
                raise DomainError("log of a non-positive value")
            return _check_finite(math.log(x))
        if fn == "sqrt":
            if x < 0.0:
                raise DomainError("sqrt of a negative value")
            return _check_finite(math.sqrt(x))
    except OverflowError as exc:
        raise DomainError(str(exc)) from exc
    raise ValueError(f"unknown function {fn!r}")


def _eval_node(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_node(node.arg, x)
    if isinstance(node, Bin):
        return _apply_op(node.op, _eval_node(node.left, x), _eval_node(node.right, x))
    if isinstance(node, Call):
        return _apply_fn(node.fn, _eval_node(node.arg, x))
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(tree, x):
    """Evaluate ``tree`` at the point ``x`` (double precision, deterministic)."""
    return _eval_node(tree.root, float(x))


# ---------------------------------------------------------------------------
# constant folding helpers (fold only fully-constant subtrees)

def _fold_bin(op, left, right):
    if isinstance(left, Num) and isinstance(right, Num):
        try:
            return Num(_apply_op(op, left.value, right.value))
        except DomainError:
            pass  # keep the node; the error surfaces on evaluation
    return Bin(op, left, right)


def _fold_neg(arg):
    if isinstance(arg, Num):
        return Num(-arg.value)
    return Neg(arg)


def _fold_call(fn, arg):
    if isinstance(arg, Num):
        try:
            return Num(_apply_fn(fn, arg.value))
        except DomainError:
            pass
    return Call(fn, arg)


# ---------------------------------------------------------------------------
# differentiation

def _diff(node, var):
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0 if node.name == var else 0.0)
    if isinstance(node, Neg):
        return _fold_neg(_diff(node.arg, var))
    if isinstance(node, Call):
        inner = _diff(node.arg, var)
        if node.fn == "sin":
            outer = _fold_call("cos", node.arg)
        elif node.fn == "cos":
            outer = _fold_neg(_fold_call("sin", node.arg))
        elif node.fn == "exp":
            outer = _fold_call("exp", node.arg)
        elif node.fn == "log":
            outer = _fold_bin("/", Num(1.0), node.arg)
        elif node.fn == "sqrt":
            outer = _fold_bin("/", Num(1.0),
                              _fold_bin("*", Num(2.0), _fold_call("sqrt", node.arg)))
        else:
            raise ValueError(f"unknown function {node.fn!r}")
        return _fold_bin("*", outer, inner)
    if isinstance(node, Bin):
        a, b = node.left, node.right
        da, db = _diff(a, var), _diff(b, var)
        if node.op == "+":
            return _fold_bin("+", da, db)
        if node.op == "-":
            return _fold_bin("-", da, db)
        if node.op == "*":
            return _fold_bin("+", _fold_bin("*", da, b), _fold_bin("*", a, db))
        if node.op == "/":
            num = _fold_bin("-", _fold_bin("*", da, b), _fold_bin("*", a, db))
            return _fold_bin("/", num, _fold_bin("^", b, Num(2.0)))
        if node.op == "^":
            if isinstance(b, Num):
                # power rule; safe for negative bases with integer exponents
                pw = _fold_bin("^", a, Num(b.value - 1.0))
                return _fold_bin("*", _fold_bin("*", Num(b.value), pw), da)
            # general a^b = exp(b log a); domain errors surface on evaluation
            term1 = _fold_bin("*", db, _fold_call("log", a))
            term2 = _fold_bin("/", _fold_bin("*", b, da), a)
            return _fold_bin("*", node, _fold_bin("+", term1, term2))
    raise TypeError(f"not an expression node: {node!r}")


def differentiate(tree, variable=None):
    """Exact symbolic derivative of ``tree``; constant subtrees fold to literals."""
    var = tree.variable if variable is None else variable
    return ExprTree(_diff(tree.root, var), tree.variable)


# ---------------------------------------------------------------------------
# printing and compilation

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _node_source(node):
    if isinstance(node, Num):
        v = node.value
        return repr(v) if v >= 0 else f"({v!r})"
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_node_source(node.arg)})"
    if isinstance(node, Call):
        return f"{node.fn}({_node_source(node.arg)})"
    if isinstance(node, Bin):
        return f"({_node_source(node.left)}{node.op}{_node_source(node.right)})"
    raise TypeError(f"not an expression node: {node!r}")


def to_source(tree):
    """Render a tree back to parseable text (fully parenthesized)."""
    return _node_source(tree.root)


_MATH_NS = {"sin": math.sin, "cos": math.cos, "exp": math.exp,
            "log": math.log, "sqrt": math.sqrt, "pow": math.pow}


def _numpy_ns():
    import numpy as np
    return {"sin": np.sin, "cos": np.cos, "exp": np.exp,
            "log": np.log, "sqrt": np.sqrt, "pow": np.power}


def _node_pysource(node, var):
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return var
    if isinstance(node, Neg):
        return f"(-{_node_pysource(node.arg, var)})"
    if isinstance(node, Call):
        return f"{node.fn}({_node_pysource(node.arg, var)})"
    if isinstance(node, Bin):
        a = _node_pysource(node.left, var)
        b = _node_pysource(node.right, var)
        if node.op == "^":
            return f"pow({a},{b})"
        return f"({a}{node.op}{b})"
    raise TypeError(f"not an expression node: {node!r}")


def compile_fn(tree, backend="math"):
    """Compile a tree to a fast callable.

    backend="math" gives a scalar function (domain violations raise);
    backend="numpy" gives a vectorized function (NaN propagates, caller checks).
    Intended for inner loops on pre-validated domains; `evaluate` remains the
    strict reference path.
    """
    src = _node_pysource(tree.root, tree.variable)
    ns = dict(_MATH_NS) if backend == "math" else _numpy_ns()
    return eval(f"lambda {tree.variable}: {src}", ns)  # noqa: S307 - own codegen
