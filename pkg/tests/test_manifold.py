import math

import numpy as np
import pytest
import sympy as sp
from scipy import optimize

from greenlab.curvature_kit import CurvatureParam, model_sphere_volume
from greenlab.manifold import (
    Custom, Model, PerturbedSphere, ScaledS3, make_profile, ricci_admissibility, volume,
)

r = sp.Symbol("r")


def k_star_oracle(f, n, L):
    """Minimum Ricci eigenvalue over (n-1), by sympy derivatives, pole limits and bounded minimization."""
    fp, fpp = sp.diff(f, r), sp.diff(f, r, 2)
    radial = -fpp / f
    tangential = (-fpp / f + (n - 2) * (1 - fp ** 2) / f ** 2) / (n - 1)
    best = math.inf
    for expr in (radial, tangential):
        for pole in (0, L):
            best = min(best, float(sp.limit(expr, r, pole)))
        func = sp.lambdify(r, expr)
        grid = np.linspace(1e-3, float(L) - 1e-3, 2001)
        vals = np.array([func(x) for x in grid])
        i = int(np.argmin(vals))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = optimize.minimize_scalar(func, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun), float(vals[i]))
    return best


@pytest.mark.parametrize("n,eps", [(3, 0.02), (3, 0.05), (4, 0.1), (5, 0.05)])
def test_perturbed_k_star_matches_symbolic_oracle(n, eps):
    f = sp.sin(r) * (1 + sp.Rational(str(eps)) * sp.sin(r) ** 2)
    want = k_star_oracle(f, n, sp.pi)
    got = ricci_admissibility(make_profile(PerturbedSphere(eps), n)).k_star
    assert got == pytest.approx(want, abs=1e-8)
    assert 0 < got < 1


@pytest.mark.parametrize("n,k", [(3, 0.5), (4, 1.0), (5, 2.0)])
def test_model_k_star_and_volume(n, k):
    w = make_profile(Model(k), n)
    assert ricci_admissibility(w).k_star == pytest.approx(k, rel=1e-10)
    assert volume(w) == pytest.approx(model_sphere_volume(CurvatureParam(k, n)), rel=1e-12)
    assert w.is_model_space(k)
    assert not w.is_model_space(1.1 * k)


def test_perturbed_volume_matches_sympy():
    eps = 0.05
    f = sp.sin(r) * (1 + sp.Rational(1, 20) * sp.sin(r) ** 2)
    want = float(4 * sp.pi * sp.integrate(sp.expand(f ** 2), (r, 0, sp.pi)))
    assert volume(make_profile(PerturbedSphere(eps), 3)) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("n,eps", [(3, 0.05), (4, 0.1)])
def test_perturbed_derivatives(n, eps):
    w = make_profile(PerturbedSphere(eps), n)
    f = sp.sin(r) * (1 + sp.Float(eps) * sp.sin(r) ** 2)
    pts = np.linspace(0, math.pi, 11)
    for prof, order in ((w.f, 0), (w.fp, 1), (w.fpp, 2), (w.f3, 3)):
        want = sp.lambdify(r, sp.diff(f, r, order), "numpy")(pts)
        np.testing.assert_allclose(prof(pts), want, atol=1e-14)


def test_custom_round_sphere_equals_model():
    w = make_profile(Custom(["sin", "rho"], ["cos", "rho"], ["-", ["sin", "rho"]], math.pi, "round"), 3)
    m = make_profile(Model(1.0), 3)
    pts = np.linspace(0, math.pi, 7)
    np.testing.assert_allclose(w.f(pts), m.f(pts), atol=1e-15)
    np.testing.assert_allclose(w.f3(pts), m.f3(pts), atol=1e-15)
    assert w.label == "round_n3"
    assert ricci_admissibility(w).k_star == pytest.approx(1.0, abs=1e-9)


def test_scaled_s3_is_unit_round_sphere():
    w = make_profile(ScaledS3(0.5), 3)
    assert w.L == pytest.approx(math.pi)
    assert w.family_k == 0.5
    assert ricci_admissibility(w).k_star == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("tag,n,msg", [
    (Model(1.0), 2, "n must be"),
    (PerturbedSphere(0.3), 3, "eps"),
    (ScaledS3(1.0), 3, "0 < k < 1"),
    (ScaledS3(0.5), 4, "three-dimensional"),
    (Custom(["sin", "rho"], ["sin", "rho"], ["-", ["sin", "rho"]], math.pi), 3, "derivative"),
    (Custom(["+", 1.0, ["sin", "rho"]], ["cos", "rho"], ["-", ["sin", "rho"]], math.pi), 3, "pole smoothness"),
])
def test_invalid_profiles_rejected(tag, n, msg):
    with pytest.raises(ValueError, match=msg):
        make_profile(tag, n)


def test_labels():
    assert make_profile(Model(0.5), 4).label == "model_n4_k0.5"
    assert make_profile(PerturbedSphere(0.05), 3).label == "perturbed_n3_eps0.05"
    assert make_profile(ScaledS3(0.25), 3).label == "scaled_s3_k0.25"
