import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from greenlab.curvature_kit import (
    CurvatureParam, arcsn_k, cs_k, ct_k, model_green, model_sphere_volume, omega, s3_scaled_green, sn_k, tn_k,
)

curvatures = st.floats(0.05, 20.0)
fractions = st.floats(1e-6, 1.0 - 1e-6)


@given(curvatures, fractions)
def test_pythagorean_identity(k, frac):
    x = frac * math.pi / math.sqrt(k)
    assert k * sn_k(k, x) ** 2 + cs_k(k, x) ** 2 == pytest.approx(1.0, abs=1e-14)


@given(curvatures, st.floats(1e-9, 0.99))
def test_tangent_and_cotangent_are_ratios(k, frac):
    x = frac * 0.5 * math.pi / math.sqrt(k)
    assert tn_k(k, x) == pytest.approx(sn_k(k, x) / cs_k(k, x), rel=1e-13)
    assert ct_k(k, x) == pytest.approx(cs_k(k, x) / sn_k(k, x), rel=1e-13)


@given(curvatures, st.floats(1e-9, 1.0))
def test_arcsn_inverts_sn(k, frac):
    x = frac * 0.5 * math.pi / math.sqrt(k)
    y = sn_k(k, x)
    assert arcsn_k(k, y) == pytest.approx(x, rel=1e-9, abs=1e-15)


@given(curvatures, st.floats(1e-12, 1e-4))
def test_small_argument_series_matches_mpmath(k, x):
    want = float(mpmath.sin(mpmath.mpf(x) * mpmath.sqrt(k)) / mpmath.sqrt(k))
    assert sn_k(k, x) == pytest.approx(want, rel=1e-15)


@pytest.mark.parametrize("n", range(2, 12))
def test_omega_matches_gamma(n):
    want = float(2 * mpmath.pi ** (mpmath.mpf(n) / 2) / mpmath.gamma(mpmath.mpf(n) / 2))
    assert omega(n) == pytest.approx(want, rel=1e-15)


def test_omega_low_dimensions():
    assert omega(2) == pytest.approx(2 * math.pi)
    assert omega(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("n,k", [(3, 1.0), (4, 0.5), (5, 2.0)])
def test_model_sphere_volume_matches_quadrature(n, k):
    p = CurvatureParam(k, n)
    integral = mpmath.quad(lambda r: (mpmath.sin(r * mpmath.sqrt(k)) / mpmath.sqrt(k)) ** (n - 1),
                           [0, mpmath.pi / mpmath.sqrt(k)])
    assert model_sphere_volume(p) == pytest.approx(omega(n) * float(integral), rel=1e-13)


@pytest.mark.parametrize("n,k", [(3, 1.0), (4, 0.5), (5, 2.0)])
def test_model_green_solves_radial_equation(n, k):
    # -u'' - (n-1) ct_k u' + n(n-2)k/4 u = 0 away from the pole
    mpmath.mp.dps = 30
    root = mpmath.sqrt(k)
    u = lambda r: (2 * mpmath.sin(r * root / 2) / root) ** (2 - n)
    for frac in (0.2, 0.5, 0.8):
        r = mpmath.mpf(frac) * mpmath.pi / root
        lhs = (-mpmath.diff(u, r, 2) - (n - 1) * root * mpmath.cot(root * r) * mpmath.diff(u, r)
               + n * (n - 2) * k / 4 * u(r))
        assert abs(lhs) < 1e-20
        assert model_green(CurvatureParam(k, n), float(r)) == pytest.approx(float(u(r)), rel=1e-14)
    mpmath.mp.dps = 15


@pytest.mark.parametrize("k", [0.25, 0.5, 0.75])
def test_scaled_green_solves_equation_and_pole_normalization(k):
    mpmath.mp.dps = 30
    a = mpmath.sqrt(1 - mpmath.mpf(3) * k / 4)
    cot = mpmath.cot(mpmath.pi * a)
    u = lambda r: (mpmath.cos(a * r) - cot * mpmath.sin(a * r)) / mpmath.sin(r)
    for r in (mpmath.mpf("0.4"), mpmath.mpf("1.7"), mpmath.mpf("2.9")):
        lhs = -mpmath.diff(u, r, 2) - 2 * mpmath.cot(r) * mpmath.diff(u, r) + 3 * k / 4 * u(r)
        assert abs(lhs) < 1e-20
        assert s3_scaled_green(k, float(r)) == pytest.approx(float(u(r)), rel=1e-13)
    mpmath.mp.dps = 15
    # r G = cos(a r) - cot(pi a) sin(a r) r/sin r -> 1 linearly in r
    assert 1e-9 * s3_scaled_green(k, 1e-9) == pytest.approx(1.0, abs=1e-8)


def test_scaled_green_limit_k_to_one_is_model():
    kk, r = sp.symbols("k r", positive=True)
    a = sp.sqrt(1 - sp.Rational(3, 4) * kk)
    formula = (sp.cos(a * r) - sp.cot(sp.pi * a) * sp.sin(a * r)) / sp.sin(r)
    limit = sp.limit(formula, kk, 1)
    assert sp.simplify(limit - 1 / (2 * sp.sin(r / 2))) == 0


@given(st.floats(0.2, math.pi - 0.2))
def test_scaled_green_numeric_limit_close_to_model(r):
    near = s3_scaled_green(1.0 - 1e-9, r)
    assert near == pytest.approx(model_green(CurvatureParam(1.0, 3), r), rel=1e-8)


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_rejects_non_positive_curvature(bad):
    with pytest.raises(ValueError):
        CurvatureParam(bad, 3)
    with pytest.raises(ValueError):
        sn_k(bad, 0.3)


def test_rejects_low_dimension_and_out_of_range():
    with pytest.raises(ValueError):
        CurvatureParam(1.0, 2)
    with pytest.raises(ValueError):
        model_green(CurvatureParam(1.0, 3), 0.0)
    with pytest.raises(ValueError):
        s3_scaled_green(1.0, 0.5)
    with pytest.raises(ValueError):
        s3_scaled_green(0.5, math.pi)


def test_vectorized_shapes():
    x = np.linspace(0.1, 1.0, 7)
    assert np.asarray(sn_k(1.0, x)).shape == (7,)
    assert isinstance(sn_k(1.0, 0.3), float)
