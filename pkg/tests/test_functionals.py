import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from greenlab import functionals as fn
from greenlab.curvature_kit import omega

from conftest import MODEL_CASES, model, perturbed


@given(st.lists(st.floats(-5, 5), min_size=5, max_size=5), st.floats(0.01, 1.0))
def test_numeric_derivative_exact_on_quartics(coef, h):
    r = h * np.arange(12)
    p = np.polynomial.Polynomial(coef)
    d = fn.numeric_derivative(r, p(r))
    np.testing.assert_allclose(d[2:-2], p.deriv()(r[2:-2]), rtol=1e-8, atol=1e-8 * (1 + max(map(abs, coef))) / h)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(0.01, 1.0))
def test_numeric_derivative_ends_exact_on_quadratics(coef, h):
    r = h * np.arange(6)
    p = np.polynomial.Polynomial(coef)
    np.testing.assert_allclose(fn.numeric_derivative(r, p(r)), p.deriv()(r), atol=1e-9 / h)


def test_level_grid():
    g = model(3, 1.0)
    r = fn.level_grid(g, 50)
    assert r.size == 50 and r[-1] == g.m and r[0] == pytest.approx(g.m / 50)


@pytest.mark.parametrize("n,k", MODEL_CASES)
def test_model_functionals_constant(n, k):
    g = model(n, k)
    it = fn.LevelIntegrator(g)
    om = omega(n)
    np.testing.assert_allclose(fn.eval_named("A", g, it=it).values, om, atol=1e-6 * om)
    np.testing.assert_allclose(fn.eval_named("V", g, it=it).values, om / n, atol=1e-6 * om)
    np.testing.assert_allclose(fn.eval_named("V_infty", g, it=it).values, 0.0, atol=1e-6 * om)
    for beta in (1.0, 2.0, 3.0):
        np.testing.assert_allclose(fn.eval_named("A_beta", g, beta, it=it).values, om, atol=1e-6 * om)


@pytest.mark.parametrize("n,k", [(3, 1.0), (4, 0.5), (5, 2.0)])
def test_sublevel_volume_matches_quadrature(n, k):
    g = model(n, k)
    it = fn.LevelIntegrator(g, fn.level_grid(g, 20))
    got, total = it.below(lambda s: np.ones_like(s["rho"]))
    root = math.sqrt(k)
    for r, val in zip(it.r[::5], got[::5]):
        want = omega(n) * integrate.quad(lambda x: (math.sin(root * x) / root) ** (n - 1), 0, r,
                                         epsrel=1e-13)[0]
        assert val == pytest.approx(want, rel=1e-11)
    assert total == pytest.approx(got[-1], rel=1e-14)


@pytest.mark.parametrize("n,eps", [(3, 0.02), (3, 0.1), (4, 0.05)])
def test_unit_weight_identities(n, eps):
    g = perturbed(n, eps)
    it = fn.LevelIntegrator(g)
    om = omega(n)
    np.testing.assert_allclose(fn.eval_I(1.0, g, it=it).values, om, atol=1e-7 * om)
    np.testing.assert_allclose(fn.eval_J(1.0, g, it=it).values, om / n, atol=1e-7 * om)
    np.testing.assert_allclose(fn.eval_W(1.0, g, it=it).values, om / (n - 2), atol=1e-7 * om)
    np.testing.assert_allclose(fn.eval_Jinf(1.0, g, it=it).values, 0.0, atol=1e-12)


@pytest.mark.parametrize("n,eps", [(3, 0.05), (4, 0.1)])
def test_A_beta_two_is_A(n, eps):
    g = perturbed(n, eps)
    it = fn.LevelIntegrator(g)
    np.testing.assert_allclose(fn.eval_named("A_beta", g, 2.0, it=it).values,
                               fn.eval_named("A", g, it=it).values, rtol=1e-13)


@pytest.mark.parametrize("n,eps", [(3, 0.05), (4, 0.1)])
def test_derivative_forms_agree(n, eps):
    g = perturbed(n, eps)
    it = fn.LevelIntegrator(g)
    A = fn.eval_named("A", g, it=it)
    V = fn.eval_named("V", g, it=it)
    inner = slice(5, -5)
    la = fn.derivative_closed_A(g, it=it)
    scale = np.max(np.abs(la))
    np.testing.assert_allclose(A.derivative_numeric[inner], la[inner], atol=1e-4 * scale)
    np.testing.assert_allclose(fn.derivative_closed_scaledA(g, A.values, it=it)[inner], la[inner],
                               atol=1e-4 * scale)
    np.testing.assert_allclose(fn.relation_V(A.values, V.values, it)[inner], V.derivative_numeric[inner],
                               atol=1e-4 * np.max(np.abs(V.derivative_numeric)))
    assert np.all(la <= 1e-12)


def test_perturbed_monotone():
    g = perturbed(3, 0.1)
    it = fn.LevelIntegrator(g)
    A = fn.eval_named("A", g, it=it).values
    V = fn.eval_named("V", g, it=it).values
    assert np.all(np.diff(A) <= 1e-9)
    assert np.all(np.diff(V) <= 1e-9)
    assert np.all(np.diff(A - 4 * V) >= -1e-9)


def test_range_and_name_errors():
    g = model(3, 1.0)
    with pytest.raises(fn.RangeError):
        fn.LevelIntegrator(g, [0.0, 1.0])
    with pytest.raises(fn.RangeError):
        fn.LevelIntegrator(g, [1.1 * g.m])
    with pytest.raises(ValueError):
        fn.eval_named("Z", g)
    with pytest.raises(ValueError):
        fn.eval_named("A_beta", g)


def test_series_derivative_and_closed_form():
    g = model(3, 1.0)
    s = fn.eval_named("V", g, r_grid=fn.level_grid(g, 40))
    assert s.derivative_numeric.shape == s.values.shape
    assert s.with_closed(np.zeros(40)).derivative_closed is not None


def test_numeric_derivative_short_grids():
    r = np.array([0.0, 0.5, 1.0, 1.5])
    np.testing.assert_allclose(fn.numeric_derivative(r, r ** 2), 2 * r, atol=1e-12)
    assert np.isnan(fn.numeric_derivative(r[:2], r[:2])).all()
    g = model(4, 1.0)
    assert fn.eval_named("A", g, r_grid=[g.m]).values[0] == pytest.approx(omega(4), rel=1e-8)
