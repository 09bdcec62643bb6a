"""Tiny expression language for orders, warps, integrands and right-hand sides.

Grammar (highest precedence first): ``^`` (right-associative), unary minus,
``* /``, ``+ -``. Atoms are decimal literals, the constant ``pi``, the
variables ``t``, ``u``, ``alpha``, and calls of the unary functions
``sin cos exp ln sqrt abs``. Anything else is rejected at parse time with a
byte offset. Evaluation raises :class:`~fracvar.errors.DomainFault` instead of
returning NaN or infinity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DisallowedVariable,
    DomainFault,
    ExprSyntaxError,
    UnboundVariable,
    UnknownIdentifier,
)

ALL_VARIABLES = frozenset({"t", "u", "alpha"})
FUNCTIONS = frozenset({"sin", "cos", "exp", "ln", "sqrt", "abs"})
_CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Node:
    pos: int | None = field(default=None, compare=False, kw_only=True)


@dataclass(frozen=True)
class Const(Node):
    value: float = 0.0


@dataclass(frozen=True)
class Var(Node):
    name: str = ""


@dataclass(frozen=True)
class Unary(Node):
    op: str = ""
    operand: Node = field(default_factory=Const)


@dataclass(frozen=True)
class Binary(Node):
    op: str = ""
    left: Node = field(default_factory=Const)
    right: Node = field(default_factory=Const)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            offset = len(src) - len(stripped)
            raise ExprSyntaxError(f"unexpected character {src[offset]!r}", offset)
        if match.lastgroup == "num":
            tokens.append(("num", match.group("num"), match.start("num")))
        elif match.lastgroup == "ident":
            tokens.append(("ident", match.group("ident"), match.start("ident")))
        else:
            tokens.append(("op", match.group("op"), match.start("op")))
        pos = match.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, allowed_vars: frozenset[str]):
        self.src = src
        self.tokens = _tokenize(src)
        self.index = 0
        self.allowed_vars = allowed_vars

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect_op(self, op: str) -> None:
        kind, text, offset = self.peek()
        if kind != "op" or text != op:
            raise ExprSyntaxError(f"expected {op!r}", offset)
        self.advance()

    def parse(self) -> Node:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected trailing input {text!r}", offset)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            kind, text, offset = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(op=text, left=node, right=self.term(), pos=offset)
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            kind, text, offset = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(op=text, left=node, right=self.unary(), pos=offset)
            else:
                return node

    def unary(self) -> Node:
        kind, text, offset = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary(op="neg", operand=self.unary(), pos=offset)
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        kind, text, offset = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right-associative; the exponent may start with a unary minus
            node = Binary(op="^", left=node, right=self.unary(), pos=offset)
        return node

    def atom(self) -> Node:
        kind, text, offset = self.advance()
        if kind == "num":
            return Const(value=float(text), pos=offset)
        if kind == "ident":
            if text in FUNCTIONS:
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return Unary(op=text, operand=inner, pos=offset)
            if text in _CONSTANTS:
                return Const(value=_CONSTANTS[text], pos=offset)
            if text in ALL_VARIABLES:
                if text not in self.allowed_vars:
                    raise DisallowedVariable(
                        f"variable {text!r} is not allowed here", offset
                    )
                return Var(name=text, pos=offset)
            raise UnknownIdentifier(f"unknown identifier {text!r}", offset)
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ExprSyntaxError(
            "expected a number, name or parenthesized expression", offset
        )


def parse(src: str, allowed_vars: frozenset[str] | set[str] = ALL_VARIABLES) -> Node:
    """Parse expression text into a node tree.

    Raises ExprSyntaxError (with byte offset), UnknownIdentifier or
    DisallowedVariable on malformed input.
    """
    return _Parser(src, frozenset(allowed_vars)).parse()


def variables(node: Node) -> set[str]:
    """The set of variable names appearing in the tree."""
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Unary):
        return variables(node.operand)
    if isinstance(node, Binary):
        return variables(node.left) | variables(node.right)
    return set()


def _fault(message: str, node: Node):
    raise DomainFault(message, node.pos)


def _check_finite(value, node: Node):
    if isinstance(value, np.ndarray):
        if not np.all(np.isfinite(value)):
            _fault("expression evaluated to a non-finite value", node)
    elif not math.isfinite(value):
        _fault("expression evaluated to a non-finite value", node)
    return value


def evaluate(node: Node, env: dict[str, float | np.ndarray]):
    """Evaluate the tree with the given variable bindings.

    Bindings may be scalars or numpy arrays (broadcast elementwise). Domain
    faults (log of a nonpositive value, division by zero, negative base with
    fractional exponent, overflow to infinity) raise DomainFault.
    """
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnboundVariable(node.name) from None
    if isinstance(node, Unary):
        value = evaluate(node.operand, env)
        return _apply_unary(node, value)
    if isinstance(node, Binary):
        left = evaluate(node.left, env)
        right = evaluate(node.right, env)
        return _apply_binary(node, left, right)
    raise TypeError(f"not an expression node: {node!r}")


def _apply_unary(node: Unary, value):
    op = node.op
    arraylike = isinstance(value, np.ndarray)
    if op == "neg":
        return -value
    if op == "abs":
        return np.abs(value) if arraylike else abs(value)
    if op == "ln":
        if arraylike:
            if np.any(value <= 0.0):
                _fault("ln of a nonpositive value", node)
            return np.log(value)
        if value <= 0.0:
            _fault("ln of a nonpositive value", node)
        return math.log(value)
    if op == "sqrt":
        if arraylike:
            if np.any(value < 0.0):
                _fault("sqrt of a negative value", node)
            return np.sqrt(value)
        if value < 0.0:
            _fault("sqrt of a negative value", node)
        return math.sqrt(value)
    if op in ("sin", "cos", "exp"):
        if arraylike:
            with np.errstate(over="ignore"):
                result = getattr(np, op)(value)
            return _check_finite(result, node)
        try:
            return _check_finite(getattr(math, op)(value), node)
        except OverflowError:
            _fault("overflow in exp", node)
    raise TypeError(f"unknown unary operator {op!r}")


def _is_integral(exponent) -> bool:
    return float(exponent) == int(exponent)


def _apply_binary(node: Binary, left, right):
    op = node.op
    if op == "+":
        return _check_finite(left + right, node)
    if op == "-":
        return _check_finite(left - right, node)
    if op == "*":
        with np.errstate(over="ignore", invalid="ignore"):
            return _check_finite(left * right, node)
    if op == "/":
        if isinstance(right, np.ndarray):
            if np.any(right == 0.0):
                _fault("division by zero", node)
        elif right == 0.0:
            _fault("division by zero", node)
        with np.errstate(over="ignore", invalid="ignore"):
            return _check_finite(left / right, node)
    if op == "^":
        return _power(node, left, right)
    raise TypeError(f"unknown binary operator {op!r}")


def _power(node: Binary, base, exponent):
    scalar_exp = not isinstance(exponent, np.ndarray)
    if isinstance(base, np.ndarray) or not scalar_exp:
        base_arr = np.asarray(base, dtype=float)
        exp_arr = np.asarray(exponent, dtype=float)
        integral = scalar_exp and _is_integral(exponent)
        if np.any((base_arr < 0.0) & ~integral):
            _fault("negative base with fractional exponent", node)
        if np.any((base_arr == 0.0) & (exp_arr < 0.0)):
            _fault("zero base with negative exponent", node)
        with np.errstate(over="ignore", invalid="ignore"):
            return _check_finite(np.power(base_arr, exp_arr), node)
    if base < 0.0 and not _is_integral(exponent):
        _fault("negative base with fractional exponent", node)
    if base == 0.0 and exponent < 0.0:
        _fault("zero base with negative exponent", node)
    try:
        return _check_finite(math.pow(base, exponent), node)
    except OverflowError:
        _fault("overflow in power", node)


# --- symbolic derivative -----------------------------------------------------

def _const(value: float) -> Const:
    return Const(value=float(value))

_ZERO = _const(0.0)
_ONE = _const(1.0)


def _is_const(node: Node, value: float | None = None) -> bool:
    if not isinstance(node, Const):
        return False
    return value is None or node.value == value


def _add(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value + b.value)
    return Binary(op="+", left=a, right=b)


def _sub(a: Node, b: Node) -> Node:
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value - b.value)
    if _is_const(a, 0.0):
        return _neg(b)
    return Binary(op="-", left=a, right=b)


def _neg(a: Node) -> Node:
    if isinstance(a, Const):
        return _const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.operand
    return Unary(op="neg", operand=a)


def _mul(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return _const(a.value * b.value)
    return Binary(op="*", left=a, right=b)


def _div(a: Node, b: Node) -> Node:
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(b, 1.0):
        return a
    return Binary(op="/", left=a, right=b)


def _pow(a: Node, b: Node) -> Node:
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        return _ONE
    return Binary(op="^", left=a, right=b)


def derivative(node: Node, var: str) -> Node:
    """Symbolic derivative of the tree with respect to ``var``.

    abs differentiates to operand/abs(operand) * operand', which correctly
    faults at the kink instead of inventing a value there.
    """
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if node.name == var else _ZERO
    if isinstance(node, Unary):
        inner = node.operand
        dinner = derivative(inner, var)
        if node.op == "neg":
            return _neg(dinner)
        if node.op == "sin":
            return _mul(Unary(op="cos", operand=inner), dinner)
        if node.op == "cos":
            return _neg(_mul(Unary(op="sin", operand=inner), dinner))
        if node.op == "exp":
            return _mul(Unary(op="exp", operand=inner), dinner)
        if node.op == "ln":
            return _div(dinner, inner)
        if node.op == "sqrt":
            return _div(dinner, _mul(_const(2.0), Unary(op="sqrt", operand=inner)))
        if node.op == "abs":
            sign = _div(inner, Unary(op="abs", operand=inner))
            return _mul(sign, dinner)
        raise TypeError(f"unknown unary operator {node.op!r}")
    if isinstance(node, Binary):
        f, g = node.left, node.right
        df, dg = derivative(f, var), derivative(g, var)
        if node.op == "+":
            return _add(df, dg)
        if node.op == "-":
            return _sub(df, dg)
        if node.op == "*":
            return _add(_mul(df, g), _mul(f, dg))
        if node.op == "/":
            numer = _sub(_mul(df, g), _mul(f, dg))
            return _div(numer, _pow(g, _const(2.0)))
        if node.op == "^":
            if isinstance(g, Const):
                scaled = _mul(g, _pow(f, _const(g.value - 1.0)))
                return _mul(scaled, df)
            # general exponent: f^g * (g' ln f + g f'/f)
            bracket = _add(
                _mul(dg, Unary(op="ln", operand=f)),
                _mul(g, _div(df, f)),
            )
            return _mul(_pow(f, g), bracket)
        raise TypeError(f"unknown binary operator {node.op!r}")
    raise TypeError(f"not an expression node: {node!r}")


# --- printing ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM_PREC = 5


def _prec(node: Node) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return _PREC["neg"]
    return _ATOM_PREC


def to_source(node: Node) -> str:
    """Render the tree as parseable text (minimal parentheses)."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = to_source(node.operand)
            if _prec(node.operand) < _PREC["neg"]:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({to_source(node.operand)})"
    if isinstance(node, Binary):
        op = node.op
        left, right = to_source(node.left), to_source(node.right)
        if op == "^":
            if _prec(node.left) <= _PREC["^"] and not isinstance(node.left, (Const, Var)):
                left = f"({left})"
            elif isinstance(node.left, Const) and node.left.value < 0:
                left = f"({left})"
            if _prec(node.right) < _PREC["^"]:
                right = f"({right})"
            return f"{left}^{right}"
        if _prec(node.left) < _PREC[op]:
            left = f"({left})"
        # - and / do not associate on the right
        right_min = _PREC[op] + (1 if op in ("-", "/") else 0)
        if _prec(node.right) < right_min:
            right = f"({right})"
        return f"{left} {op} {right}"
    raise TypeError(f"not an expression node: {node!r}")
