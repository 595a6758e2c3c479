"""A minimal arithmetic expression tree for user-supplied warp functions.

Expressions are JSON values: a number, the string ``"rho"``, the string
``"pi"``, or a list ``[op, arg, ...]`` with ``op`` one of ``+ - * / pow sin
cos``. Unary ``-`` negates. Trees are parsed into tuples, evaluated with
numpy, and differentiated symbolically so that pole limits can be computed
without sampling.
"""

from __future__ import annotations

import math
from typing import Any, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = ["Expr", "ExpressionError", "derivative", "evaluate", "parse", "to_json"]

Expr = Union[float, str, tuple]

_BINARY = {"+", "*", "/", "pow"}
_UNARY = {"sin", "cos"}


class ExpressionError(ValueError):
    """Raised for malformed expression trees."""


def parse(node: Any) -> Expr:
    """Validate a JSON expression and return its canonical tuple form."""
    if isinstance(node, bool):
        raise ExpressionError("booleans are not expressions")
    if isinstance(node, (int, float)):
        if not math.isfinite(node):
            raise ExpressionError(f"non-finite constant {node!r}")
        return float(node)
    if isinstance(node, str):
        if node == "pi":
            return math.pi
        if node == "rho":
            return "rho"
        raise ExpressionError(f"unknown symbol {node!r}")
    if isinstance(node, (list, tuple)) and node:
        op, args = node[0], [parse(a) for a in node[1:]]
        if op == "-" and len(args) in (1, 2):
            return ("-", *args)
        if op in _BINARY and len(args) == 2:
            if op == "pow" and not isinstance(args[1], float):
                raise ExpressionError("pow exponent must be a constant")
            return (op, *args)
        if op in _UNARY and len(args) == 1:
            return (op, args[0])
        raise ExpressionError(f"bad operator or arity: {op!r} with {len(args)} arguments")
    raise ExpressionError(f"cannot parse {node!r}")


def to_json(expr: Expr) -> Any:
    """Inverse of :func:`parse` (constants stay numeric)."""
    if isinstance(expr, tuple):
        return [expr[0], *(to_json(a) for a in expr[1:])]
    return expr


def evaluate(expr: Expr, rho: ArrayLike) -> NDArray[np.float64]:
    """Evaluate ``expr`` at the radii ``rho``."""
    x = np.asarray(rho, dtype=float)
    if isinstance(expr, float):
        return np.full_like(x, expr)
    if expr == "rho":
        return x.copy()
    op, *args = expr
    vals = [evaluate(a, x) for a in args]
    if op == "-":
        return -vals[0] if len(vals) == 1 else vals[0] - vals[1]
    if op == "+":
        return vals[0] + vals[1]
    if op == "*":
        return vals[0] * vals[1]
    if op == "/":
        return vals[0] / vals[1]
    if op == "pow":
        return vals[0] ** args[1]
    if op == "sin":
        return np.sin(vals[0])
    return np.cos(vals[0])


def _mul(a: Expr, b: Expr) -> Expr:
    if a == 0.0 or b == 0.0:
        return 0.0
    if a == 1.0:
        return b
    if b == 1.0:
        return a
    return ("*", a, b)


def _add(a: Expr, b: Expr) -> Expr:
    if a == 0.0:
        return b
    if b == 0.0:
        return a
    return ("+", a, b)


def _neg(a: Expr) -> Expr:
    return 0.0 if a == 0.0 else ("-", a)


def derivative(expr: Expr) -> Expr:
    """Symbolic derivative with respect to ``rho``."""
    if isinstance(expr, float):
        return 0.0
    if expr == "rho":
        return 1.0
    op, *args = expr
    if op == "-":
        if len(args) == 1:
            return _neg(derivative(args[0]))
        return _add(derivative(args[0]), _neg(derivative(args[1])))
    if op == "+":
        return _add(derivative(args[0]), derivative(args[1]))
    a = args[0]
    da = derivative(a)
    if op == "*":
        b = args[1]
        return _add(_mul(da, b), _mul(a, derivative(b)))
    if op == "/":
        b = args[1]
        num = _add(_mul(da, b), _neg(_mul(a, derivative(b))))
        return ("/", num, ("pow", b, 2.0)) if num != 0.0 else 0.0
    if op == "pow":
        p = args[1]
        return _mul(_mul(p, ("pow", a, p - 1.0)), da)
    if op == "sin":
        return _mul(("cos", a), da)
    return _mul(_neg(("sin", a)), da)
