import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from greenlab import expressions as ex

rho = sp.Symbol("rho")


def to_sympy(node):
    """Oracle translator from the JSON grammar to sympy."""
    if isinstance(node, (int, float)):
        return sp.Integer(int(node)) if float(node).is_integer() else sp.Float(node)
    if node == "rho":
        return rho
    if node == "pi":
        return sp.pi
    op, *args = node
    a = [to_sympy(x) for x in args]
    return {
        "+": lambda: a[0] + a[1], "*": lambda: a[0] * a[1], "/": lambda: a[0] / a[1],
        "-": lambda: -a[0] if len(a) == 1 else a[0] - a[1],
        "pow": lambda: a[0] ** a[1], "sin": lambda: sp.sin(a[0]), "cos": lambda: sp.cos(a[0]),
    }[op]()


leaves = st.one_of(st.just("rho"), st.just("pi"), st.floats(-3, 3, allow_nan=False).map(lambda x: round(x, 3)))
trees = st.recursive(
    leaves,
    lambda kids: st.one_of(
        st.tuples(st.sampled_from(["+", "*", "-"]), kids, kids).map(list),
        st.tuples(st.sampled_from(["sin", "cos", "-"]), kids).map(list),
        st.tuples(st.just("pow"), kids, st.sampled_from([2.0, 3.0])).map(list),
    ),
    max_leaves=8,
)
points = np.linspace(0.0, 2.0, 9)


@given(trees)
def test_evaluate_matches_sympy(tree):
    e = ex.parse(tree)
    want = sp.lambdify(rho, to_sympy(tree), "numpy")
    np.testing.assert_allclose(ex.evaluate(e, points), np.broadcast_to(want(points), points.shape),
                               rtol=1e-12, atol=1e-9)


@given(trees)
def test_derivative_matches_sympy(tree):
    d = ex.derivative(ex.parse(tree))
    want = sp.lambdify(rho, sp.diff(to_sympy(tree), rho), "numpy")
    np.testing.assert_allclose(ex.evaluate(d, points), np.broadcast_to(want(points), points.shape),
                               rtol=1e-10, atol=1e-8)


@given(trees)
def test_json_round_trip(tree):
    e = ex.parse(tree)
    assert ex.parse(ex.to_json(e)) == e


def test_quotient_derivative():
    tree = ["/", ["sin", "rho"], ["+", 2.0, ["cos", "rho"]]]
    d = ex.derivative(ex.parse(tree))
    want = sp.lambdify(rho, sp.diff(to_sympy(tree), rho))
    assert float(ex.evaluate(d, np.array([0.7]))[0]) == pytest.approx(want(0.7), rel=1e-13)


def test_constants():
    assert ex.parse("pi") == math.pi
    assert ex.parse(2) == 2.0


@pytest.mark.parametrize("bad", [
    "x", True, [], ["tan", "rho"], ["+", "rho"], ["pow", "rho", "rho"], float("nan"), {"op": "+"},
])
def test_malformed_trees_rejected(bad):
    with pytest.raises(ex.ExpressionError):
        ex.parse(bad)
