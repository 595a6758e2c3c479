import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from greenlab.manifold import Model, PerturbedSphere, ScaledS3
from greenlab.radial_fields import (
    IDENTITY_RESIDUALS, NOISE_FLOOR, RefinementStudy, beta_tilde, laplace_v_beta, radial_structure_residuals,
    refinement_study,
)

from conftest import fields

CASES = [(Model(1.0), 3, 1.0), (Model(2.0), 4, 2.0), (PerturbedSphere(0.05), 3, None),
         (PerturbedSphere(0.1), 4, None), (ScaledS3(0.5), 3, 0.5)]


@pytest.mark.parametrize("n,k", [(3, 1.0), (4, 0.5), (5, 2.0)])
def test_model_fields_closed_form(n, k):
    t = fields(Model(k), n, k)
    mask = t.interior()
    rho = t.rho[mask]
    root = math.sqrt(k)
    sn_half = np.sin(0.5 * root * rho) / root
    np.testing.assert_allclose(t.psi[mask], sn_half ** 2, rtol=1e-9)
    np.testing.assert_allclose(t.v_sq[mask], 1.0, atol=1e-9)
    np.testing.assert_allclose(t.grad_sn[mask], 0.5 * np.cos(0.5 * root * rho), atol=1e-9)
    # on the model the traceless Hessian vanishes: Hess psi = (cs_k(b)/2) g
    assert np.max(np.abs(t.B_nu_nu[mask])) < 1e-8
    assert np.max(np.abs(t.Q[mask])) < 1e-8


@pytest.mark.parametrize("tag,n,k", CASES)
@pytest.mark.parametrize("name", sorted(IDENTITY_RESIDUALS))
def test_identities_closed_and_differenced(tag, n, k, name):
    t = fields(tag, n, k)
    assert IDENTITY_RESIDUALS[name](t).sup_relative < 1e-6
    mid = t.rho[(t.rho > 0.3 * t.green.L) & (t.rho < 0.7 * t.green.L)]
    assert IDENTITY_RESIDUALS[name](t, rho=mid, spacing=t.green.L / 96).sup_relative < 1e-6


@pytest.mark.parametrize("tag,n,k", CASES)
@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 3.0])
def test_laplace_v_beta(tag, n, k, beta):
    t = fields(tag, n, k)
    _, res = laplace_v_beta(t, beta)
    assert res.sup_relative < 1e-6


@pytest.mark.parametrize("tag,n,k", CASES)
def test_structure_zero(tag, n, k):
    for r in radial_structure_residuals(fields(tag, n, k)).values():
        assert r.sup_relative < 1e-9, r.name


@pytest.mark.parametrize("tag,n,k", [CASES[2], CASES[3], CASES[4]])
@pytest.mark.parametrize("name", ["laplace_psi", "bochner_L", "grad_v", "grad_grad_sn"])
def test_refinement_order(tag, n, k, name):
    study = refinement_study(fields(tag, n, k), name)
    assert study.passed, (study.residuals, study.orders)


def test_refinement_beta_family():
    study = refinement_study(fields(PerturbedSphere(0.05), 3), "laplace_v_beta", beta=0.5)
    assert study.name == "laplace_v_beta@0.5"
    assert study.passed
    with pytest.raises(ValueError):
        refinement_study(fields(PerturbedSphere(0.05), 3), "laplace_v_beta")


def test_refinement_study_rules():
    assert RefinementStudy("x", (1, 0.5), (1e-3, 6e-5)).passed  # order 4.06
    assert not RefinementStudy("x", (1, 0.5), (1e-3, 2.5e-4)).passed  # order 2
    assert RefinementStudy("x", (1, 0.5), (1e-7, 0.9 * NOISE_FLOOR)).passed  # floor
    assert not RefinementStudy("x", (1, 0.5), (1e-3, float("nan"))).passed


@given(st.integers(3, 8), st.floats(0.0, 1.0), st.floats(0.01, 1.0), st.floats(0.0, 4.0))
def test_beta_tilde_nonnegative_above_threshold(n, x, v_sq, extra):
    # k psi <= v^2 always, so k psi / v^2 = x v^2 / v^2 with x in [0, 1]
    beta = (n - 2) / (n - 1) + extra
    vals = {"psi": np.array([x * v_sq]), "v_sq": np.array([v_sq])}
    assert beta_tilde(vals, beta, n, 1.0)[0] >= -1e-12


@given(st.integers(3, 8), st.floats(0.01, 0.99))
def test_beta_tilde_negative_below_threshold_at_zero_psi(n, frac):
    beta = frac * (n - 2) / (n - 1)
    vals = {"psi": np.array([0.0]), "v_sq": np.array([1.0])}
    assert beta_tilde(vals, beta, n, 1.0)[0] < 0


@pytest.mark.parametrize("tag,n,k", CASES[2:])
def test_gradient_bound_off_model(tag, n, k):
    t = fields(tag, n, k)
    assert np.max(t.v_sq[t.interior()]) < 1.0
