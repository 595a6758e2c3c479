import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from greenlab.curvature_kit import CurvatureParam, model_green, omega, s3_scaled_green
from greenlab.green_solver import (
    GAUSS_NODES, GAUSS_WEIGHTS, SolverSettings, b_function, integral_G_total, panel_nodes, radial_grid, solve,
)
from greenlab.manifold import Model, make_profile

from conftest import MODEL_CASES, SCALED_KS, model, perturbed, scaled


@pytest.mark.parametrize("n,k", MODEL_CASES)
def test_model_matches_closed_form(n, k):
    g = model(n, k)
    rho = np.linspace(0.01 * g.L, g.L, 400)
    want = model_green(CurvatureParam(k, n), rho)
    np.testing.assert_allclose(g.u_at(rho), want, rtol=1e-8)
    np.testing.assert_allclose(b_function(g).value(rho), rho, atol=1e-9)
    assert g.m == pytest.approx(g.L, rel=1e-12)


@pytest.mark.parametrize("k", SCALED_KS)
def test_scaled_sphere_matches_explicit_formula(k):
    g = scaled(k)
    rho = np.linspace(0.01 * math.pi, 0.999 * math.pi, 300)
    np.testing.assert_allclose(g.u_at(rho), s3_scaled_green(k, rho), rtol=1e-8)


def _radau_shape(w, k, rho_a, rho_b):
    """Independent route: Radau from the antipode with a two-term regular series."""
    n, L = w.n, w.L
    lam = n * (n - 2) * k / 4
    s0 = 1e-3
    u0 = 1 + lam * s0 ** 2 / (2 * n)
    du0 = -lam * s0 / n  # d/drho at rho = L - s0

    def rhs(r, y):
        fr = w.f(np.array([r]))[0]
        fpr = w.fp(np.array([r]))[0]
        return [y[1], lam * y[0] - (n - 1) * fpr / fr * y[1]]

    sol = solve_ivp(rhs, (L - s0, rho_a), [u0, du0], method="Radau", rtol=1e-12, atol=1e-14, dense_output=True)
    return sol.sol(rho_a)[0] / sol.sol(rho_b)[0]


@pytest.mark.parametrize("n,eps", [(3, 0.05), (4, 0.1)])
def test_perturbed_shape_matches_independent_integrator(n, eps):
    g = perturbed(n, eps)
    want = _radau_shape(g.profile, g.k, 0.5, 2.5)
    got = g.u_at(0.5)[0] / g.u_at(2.5)[0]
    assert got == pytest.approx(want, rel=1e-7)


@pytest.mark.parametrize("n,eps", [(3, 0.02), (4, 0.1)])
def test_pole_asymptotics(n, eps):
    g = perturbed(n, eps)
    rho = np.array([1e-6, 1e-5])
    np.testing.assert_allclose(g.u_at(rho) * rho ** (n - 2), 1.0, rtol=1e-5)


@pytest.mark.parametrize("n,eps", [(3, 0.02), (3, 0.1), (4, 0.05)])
def test_positive_decreasing_and_flux(n, eps):
    g = perturbed(n, eps)
    assert np.all(g.u > 0)
    assert np.all(g.u_prime < 0)
    f = g.profile.f(g.grid)
    flux = -f ** (n - 1) * g.u_prime
    # flux through the sphere of radius rho equals (n-2) minus the absorbed mass
    assert flux[0] == pytest.approx(n - 2, rel=1e-5)
    assert integral_G_total(g) == pytest.approx(omega(n), rel=1e-8)


@pytest.mark.parametrize("n,k", [(3, 1.0), (4, 2.0)])
def test_mis_normalization_scales_u(n, k):
    w = make_profile(Model(k), n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        g = solve(w, k, mis_normalize=1.25)
    base = model(n, k)
    assert g.normalization_c == pytest.approx(1.25 * base.normalization_c, rel=1e-12)
    np.testing.assert_allclose(g.u * 1.25, base.u, rtol=1e-12)


def test_settings_are_effective():
    g = model(3, 1.0)
    assert g.diagnostics["rtol"] == SolverSettings().rtol
    grid = radial_grid(math.pi)
    assert np.all(np.diff(grid) > 0)
    assert grid[0] > 0 and grid[-1] < math.pi


def test_gauss_rule_exact_to_degree_13():
    for d in range(14):
        assert float(GAUSS_WEIGHTS @ GAUSS_NODES ** d) == pytest.approx(1 / (d + 1), rel=1e-14)
    x, wts = panel_nodes(np.array([0.0, 0.5, 2.0]))
    assert float(np.sum(wts * x ** 3)) == pytest.approx(4.0, rel=1e-14)


@pytest.mark.parametrize("k", [0.0, -1.0, float("nan")])
def test_invalid_k(k):
    with pytest.raises(ValueError):
        solve(make_profile(Model(1.0), 3), k)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.3, 3.0), st.integers(3, 6))
def test_model_solution_property(k, n):
    w = make_profile(Model(k), n)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        g = solve(w, k)
    rho = np.linspace(0.05, 0.95, 9) * g.L
    np.testing.assert_allclose(g.u_at(rho), model_green(CurvatureParam(k, n), rho), rtol=1e-8)
    bf = b_function(g)
    np.testing.assert_allclose(bf.derivative(rho), 1.0, atol=1e-7)
