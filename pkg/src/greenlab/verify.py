"""The verification battery: every invariant of one solved manifold as a check record.

Checks never raise; a failing check is a record with ``passed = False``.
Only solver errors (no usable Green's function at all) abort a battery.
Records are sorted by name so reports are byte-for-byte reproducible.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable

import numpy as np
from numpy.typing import NDArray
from scipy import integrate

from . import functionals as fn
from .curvature_kit import CurvatureParam, model_sphere_volume, omega, sn_k
from .green_solver import (
    GAUSS_NODES,
    GAUSS_WEIGHTS,
    RadialGreen,
    SolverSettings,
    b_function,
    integral_G_total,
    solve,
)
from .manifold import Custom, Model, PerturbedSphere, ScaledS3, WarpProfile, ricci_admissibility, volume
from .radial_fields import (
    IDENTITY_RESIDUALS,
    RadialFieldTable,
    ResidualField,
    beta_tilde,
    build_fields,
    laplace_v_beta,
    radial_structure_residuals,
    refinement_study,
)

__all__ = [
    "BatteryConfig",
    "CheckRecord",
    "VerificationReport",
    "check_Am_identity",
    "check_bishop_dim4",
    "check_volume_bounds",
    "default_betas",
    "run_battery",
]

SCHEMA_VERSION = 1
# Model consistency: sup |v^2 - 1| below this classifies a run as the rigidity case.
MODEL_THRESHOLD = 1e-6
# Skip level-set bounds where cs_k(r/2) is this close to zero (0/0 at the model antipode).
CS_FLOOR = 1e-8
DERIVATIVE_EDGE = 2


@dataclass(frozen=True)
class CheckRecord:
    """One verified statement; ``measured`` is the residual or the worst margin."""

    name: str
    statement: str
    measured: float
    tolerance: float
    passed: bool
    error_estimate: float = 0.0
    skipped: bool = False
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _record(name: str, statement: str, measured: float, tolerance: float, *,
            error_estimate: float = 0.0, detail: str = "", passed: bool | None = None) -> CheckRecord:
    measured = float(measured)
    if passed is None:
        passed = bool(np.isfinite(measured) and measured <= tolerance)
    return CheckRecord(name, statement, measured, float(tolerance), bool(passed),
                       float(error_estimate), False, detail)


def _skip(name: str, statement: str, reason: str) -> CheckRecord:
    return CheckRecord(name, statement, float("nan"), float("nan"), True, 0.0, True, reason)


def default_betas(n: int) -> tuple[float, ...]:
    return ((n - 2) / (n - 1), 1.0, 2.0, 3.0)


@dataclass(frozen=True)
class BatteryConfig:
    """Knobs of one battery run; ``mis_normalize`` and ``inflate_k`` build negative controls."""

    betas: tuple[float, ...] | None = None
    levels: int = fn.DEFAULT_LEVELS
    settings: SolverSettings = field(default_factory=SolverSettings)
    mis_normalize: float = 1.0
    inflate_k: float = 1.0
    refinement: bool = True


@dataclass(frozen=True)
class VerificationReport:
    manifold: str
    parameters: dict[str, Any]
    records: tuple[CheckRecord, ...]
    rigidity: dict[str, Any]
    budget_closed: bool

    @property
    def failures(self) -> tuple[CheckRecord, ...]:
        return tuple(r for r in self.records if not r.skipped and not r.passed)

    @property
    def passed(self) -> bool:
        return not self.failures

    def record(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        counted = [r for r in self.records if not r.skipped]
        return {
            "schema_version": SCHEMA_VERSION,
            "manifold": self.manifold,
            "parameters": self.parameters,
            "summary": {
                "passed": self.passed,
                "checks": len(self.records),
                "failed": len(self.failures),
                "skipped": len(self.records) - len(counted),
                "budget_closed": self.budget_closed,
            },
            "rigidity": self.rigidity,
            "checks": [r.to_dict() for r in self.records],
        }

    def to_text(self) -> str:
        lines = [f"manifold {self.manifold}"]
        lines += [f"  {key} = {value}" for key, value in self.parameters.items()]
        lines.append("rigidity: " + ", ".join(f"{k}={v}" for k, v in self.rigidity.items()))
        for r in self.records:
            status = "SKIP" if r.skipped else ("PASS" if r.passed else "FAIL")
            extra = f" ({r.detail})" if r.detail else ""
            lines.append(f"{status} {r.name}: measured {r.measured:.3e} tol {r.tolerance:.1e}{extra}")
        verdict = "PASS" if self.passed else f"FAIL ({len(self.failures)} failing)"
        lines.append(f"verdict: {verdict}")
        return "\n".join(lines) + "\n"


# --- helpers -------------------------------------------------------------------

def _family_parameters(w: WarpProfile) -> dict[str, Any]:
    fam = w.family
    if isinstance(fam, (Model, ScaledS3)):
        return {"family": type(fam).__name__, "k_family": fam.k}
    if isinstance(fam, PerturbedSphere):
        return {"family": "PerturbedSphere", "eps": fam.eps}
    assert isinstance(fam, Custom)
    return {"family": "Custom", "label": fam.label}


def extrapolate_to_zero(r: NDArray[np.float64], values: NDArray[np.float64]) -> tuple[float, float]:
    """Quadratic extrapolation of the three smallest levels to ``r = 0``.

    The estimate's error is taken as its distance to the linear extrapolant.
    """
    x, y = np.asarray(r[:3], dtype=float), np.asarray(values[:3], dtype=float)
    quad = float(np.polyval(np.polyfit(x, y, 2), 0.0))
    lin = float(np.polyval(np.polyfit(x[:2], y[:2], 1), 0.0))
    return quad, abs(quad - lin)


def _monotone(name: str, statement: str, values: NDArray[np.float64], increasing: bool,
              tol: NDArray[np.float64] | float) -> CheckRecord:
    step = np.diff(values)
    bad = -step if increasing else step
    allowed = np.broadcast_to(np.asarray(tol, dtype=float), values.shape)[1:]
    excess = bad - allowed
    worst = int(np.argmax(excess))
    measured = float(bad[worst])
    ok = bool(np.all(np.isfinite(excess)) and np.all(excess <= 0))
    detail = f"{int(np.sum(excess > 0))} violations"
    return _record(name, statement, measured, float(allowed[worst]), passed=ok, detail=detail)


def _interior(a: NDArray[np.float64]) -> NDArray[np.float64]:
    return a[DERIVATIVE_EDGE:-DERIVATIVE_EDGE]


def _derivative_check(name: str, statement: str, numeric: NDArray[np.float64],
                      closed: NDArray[np.float64], floor: float, error_estimate: float) -> CheckRecord:
    """Relative agreement on interior levels; ``error_estimate`` is absolute, in derivative units."""
    num, pap = _interior(numeric), _interior(closed)
    scale = max(float(np.max(np.abs(pap))), floor)
    rel = float(np.max(np.abs(num - pap))) / scale
    if not np.all(np.isfinite(pap)) or not np.all(np.isfinite(num)):
        rel = float("nan")
    return _record(name, statement, rel, 1e-4, error_estimate=error_estimate / scale,
                   detail=f"scale {scale:.3e}")


# --- solver and b --------------------------------------------------------------

def _solver_checks(g: RadialGreen) -> list[CheckRecord]:
    w, n, k = g.profile, g.n, g.k
    rtol = g.diagnostics["rtol"]
    est = 10.0 * rtol
    out: list[CheckRecord] = []
    inner = g.grid
    u, du = g.u, g.u_prime
    out.append(_record("solver.u_positive", "u > 0 on (0, L)", -float(np.min(u)), 0.0,
                       passed=bool(np.all(u > 0))))
    out.append(_record("solver.u_decreasing", "u' < 0 on (0, L)", float(np.max(du)), 0.0,
                       passed=bool(np.all(du < 0))))

    # pole normalization rho^(n-2) u -> 1
    probe = inner[:3]
    lim, spread = extrapolate_to_zero(probe, probe ** (n - 2) * u[:3])
    tol = max(1e-8, 10.0 * spread)
    out.append(_record("solver.pole_normalization", "rho^(n-2) u(rho) -> 1 at the pole",
                       abs(lim - 1.0), tol, error_estimate=spread))

    flux = g.diagnostics["flux_at_floor"]
    out.append(_record("solver.flux_normalization", "-u' f^(n-1) -> n - 2 at the pole",
                       abs(flux / (n - 2) - 1.0), 1e-6, error_estimate=est))

    floor_value = (2.0 / math.sqrt(k)) ** (2 - n)
    u_top = float(g.u_at(g.L)[0])
    out.append(_record("solver.antipode_lower_bound", "u(L) >= (2/sqrt k)^(2-n)",
                       (floor_value - u_top) / floor_value, 1e-9, error_estimate=est))

    # ODE residual in flux form between consecutive off-grid probes:
    # [u' f^(n-1)]_a^b = lam int_a^b u f^(n-1), which needs no differencing of u
    mid = 0.5 * (inner[1:] + inner[:-1])
    mid = mid[(mid > 1e-3 * g.L) & (mid < g.L - 1e-3 * g.L)]
    flux_mid = g.du_at(mid) * w.f(mid) ** (n - 1)
    h = np.diff(mid)
    x = mid[:-1, None] + h[:, None] * GAUSS_NODES[None, :]
    source = g.lam * ((g.u_at(x.ravel()) * w.f(x.ravel()) ** (n - 1)).reshape(x.shape)
                      * h[:, None] * GAUSS_WEIGHTS[None, :]).sum(axis=1)
    jump = np.diff(flux_mid)
    scale = np.maximum(np.abs(flux_mid[1:]), np.abs(flux_mid[:-1]))
    rel = float(np.max(np.abs(jump - source) / scale))
    out.append(_record("solver.ode_residual", "(u' f^(n-1))' = n(n-2)k/4 u f^(n-1) between off-grid probes",
                       rel, 1e-8, error_estimate=est))

    # comparison with the model Green's function where it is defined
    lim_rho = math.pi / math.sqrt(k)
    sel = inner[inner <= lim_rho]
    model = (2.0 * np.asarray(sn_k(k, 0.5 * sel))) ** (2 - n)
    gap = float(np.max((model - g.u_at(sel)) / model))
    out.append(_record("solver.model_comparison", "u >= (2 sn_k(rho/2))^(2-n)", gap, 1e-9,
                       error_estimate=est))

    total = integral_G_total(g)
    om = omega(n)
    out.append(_record("functionals.integral_G", "(nk/4) int_M G = omega_{n-1}",
                       abs(total - om) / om, 1e-7, error_estimate=est))
    return out


def _b_checks(t: RadialFieldTable) -> list[CheckRecord]:
    g = t.green
    bf = t.bfun
    k = g.k
    out: list[CheckRecord] = []
    b, bp, rho = bf.b, bf.b_prime, bf.rho
    out.append(_record("b.increasing", "b strictly increasing in rho", -float(np.min(np.diff(b))), 0.0,
                       passed=bool(np.all(np.diff(b) > 0))))
    out.append(_record("b.below_distance", "b(rho) <= rho", float(np.max(b - rho)) / g.L, 1e-9))
    inner = slice(1, -1)
    y, _ = g.chord(rho[inner])
    root = math.sqrt(k)
    chord = 2.0 / root * np.sin(0.5 * root * b[inner])
    out.append(_record("b.chord_identity", "2 sn_k(b/2) = u^(1/(2-n))",
                       float(np.max(np.abs(chord - y) / y)), 1e-10))
    pole = rho[1:4]
    lim, spread = extrapolate_to_zero(pole, b[1:4] / pole)
    out.append(_record("b.pole_ratio", "b/rho -> 1 at the pole", abs(lim - 1.0),
                       max(1e-8, 10.0 * spread), error_estimate=spread))
    limp, spreadp = extrapolate_to_zero(pole, bp[1:4])
    out.append(_record("b.pole_gradient", "b' -> 1 at the pole", abs(limp - 1.0),
                       max(1e-8, 10.0 * spreadp), error_estimate=spreadp))
    out.append(_record("gradient.b_prime_bound", "|grad b| <= 1", float(np.max(bp[inner])) - 1.0, 1e-9))
    v_sq = t.v_sq
    out.append(_record("gradient.v_sq_bound", "v^2 <= 1", float(np.max(v_sq)) - 1.0, 1e-9))
    return out


def rigidity_diagnostics(t: RadialFieldTable) -> dict[str, Any]:
    """Sup of ``v^2`` (whole grid and identity zone), gap to 1 and sup ``|B|``."""
    v_sq = t.v_sq
    zone = t.interior()
    sup_zone = float(np.max(v_sq[zone]))
    deviation = float(np.max(np.abs(v_sq - 1.0)))
    return {
        "sup_v_sq": float(np.max(v_sq)),
        "sup_v_sq_interior": sup_zone,
        "gap": 1.0 - sup_zone,
        "sup_abs_v_sq_minus_1": deviation,
        "sup_norm_B": float(np.sqrt(np.max(t.norm_B_sq[zone]))),
        "model_consistent": bool(deviation <= MODEL_THRESHOLD),
    }


def _rigidity_checks(t: RadialFieldTable, rig: dict[str, Any]) -> list[CheckRecord]:
    g = t.green
    model = g.profile.is_model_space(g.k)
    out = []
    if model:
        out.append(_record("gradient.model_equality", "v^2 = 1 on the model",
                           rig["sup_abs_v_sq_minus_1"], 1e-8))
        out.append(_skip("gradient.rigidity_gap", "sup v^2 < 1 strictly off the model",
                         "model space: equality case"))
    else:
        out.append(_skip("gradient.model_equality", "v^2 = 1 on the model", "not a model space"))
        out.append(_record("gradient.rigidity_gap", "sup v^2 < 1 strictly off the model",
                           -rig["gap"], -1e-9, passed=bool(rig["gap"] > 1e-9 and not rig["model_consistent"]),
                           detail=f"gap {rig['gap']:.3e}"))
    return out


# --- pointwise identities -------------------------------------------------------

def _identity_checks(t: RadialFieldTable, betas: Iterable[float], refinement: bool) -> list[CheckRecord]:
    n = t.green.n
    est = 10.0 * t.green.diagnostics["rtol"]
    out: list[CheckRecord] = []
    tolerances = {"laplace_psi": 1e-7, "bochner_L": 1e-6, "grad_v": 1e-6, "grad_grad_sn": 1e-6}
    statements = {
        "laplace_psi": "Lap psi = 2n |grad sn_k(b/2)|^2 - (nk/2) psi",
        "bochner_L": "L(v^2) = (2/psi)(|B|^2 + Ric(grad psi, grad psi) - (n-1)k |grad psi|^2)",
        "grad_v": "|grad v|^2 = (1/psi - k/v^2) |B(nu)|^2",
        "grad_grad_sn": "grad |grad sn|^2 = (|grad sn|/sn) B(nu) - (k/2) sn grad sn",
    }
    for name, fn_res in IDENTITY_RESIDUALS.items():
        res: ResidualField = fn_res(t)
        out.append(_record(f"fields.{name}", statements[name], res.sup_relative, tolerances[name],
                           error_estimate=est))
    for beta in betas:
        _, res = laplace_v_beta(t, beta)
        out.append(_record(f"fields.laplace_v_beta@{beta:.6g}", "Lap v^beta closed form",
                           res.sup_relative, 1e-6, error_estimate=est))
    structure = {
        "trace_free": "B(nu,nu) + (n-1) B_tan = 0",
        "II0_zero": "traceless second fundamental form vanishes",
        "B_nu_tangential_zero": "tangential part of B(nu) vanishes",
        "norm_B_split": "|B|^2 - n/(n-1)|B(nu)|^2 = |grad psi|^2 |II0|^2 = 0",
    }
    for name, res in radial_structure_residuals(t).items():
        out.append(_record(f"fields.{name}", structure[name], res.sup_relative, 1e-9))
    if refinement:
        studies = [refinement_study(t, name) for name in IDENTITY_RESIDUALS]
        studies += [refinement_study(t, "laplace_v_beta", beta) for beta in betas]
        for s in studies:
            orders = ", ".join(f"{o:.2f}" for o in s.orders)
            worst = min(s.orders) if s.orders else float("nan")
            out.append(_record(f"fields.refinement.{s.name}",
                               "difference residual decreases at order >= 4 under halving",
                               -worst, -4.0, passed=s.passed,
                               detail=f"residuals {', '.join(f'{x:.2e}' for x in s.residuals)}; orders {orders}"))
    # sign of beta~ at the threshold
    threshold = (n - 2) / (n - 1)
    grid = sorted({0.3, threshold, 1.0, 2.0, 3.0})
    agree = True
    worst = 0.0
    for beta in grid:
        m = float(np.min(beta_tilde(t, beta)))
        nonneg = m >= -1e-12
        agree &= nonneg == (beta >= threshold - 1e-15)
        if beta >= threshold:
            worst = min(worst, m)
    out.append(_record("fields.beta_tilde_sign", "beta~ >= 0 iff beta >= (n-2)/(n-1)",
                       -worst, 1e-12, passed=bool(agree),
                       detail="beta grid " + ", ".join(f"{b:.4g}" for b in grid)))
    return out


# --- functionals -----------------------------------------------------------------

def _functional_checks(t: RadialFieldTable, it: fn.LevelIntegrator,
                       betas: Iterable[float]) -> tuple[list[CheckRecord], dict[str, NDArray[np.float64]]]:
    g = t.green
    n = g.n
    om = omega(n)
    r = it.r
    S = it.S
    out: list[CheckRecord] = []
    I1 = fn.eval_I(1.0, g, it=it).values
    J1 = fn.eval_J(1.0, g, it=it).values
    W1 = fn.eval_W(1.0, g, it=it).values
    # quadrature error estimate in units of omega, measured on the constant weight
    dev = {"I": float(np.max(np.abs(I1 - om))), "J": float(np.max(np.abs(J1 - om / n))),
           "W": float(np.max(np.abs(W1 - om / (n - 2))))}
    est = max(max(dev.values()), 10.0 * g.diagnostics["rtol"] * om)
    for key, target, name in (("I", om, "I1"), ("J", om / n, "J1"), ("W", om / (n - 2), "W1")):
        out.append(_record(f"functionals.{name}_constant", f"{name} is constant = {target:.6g}",
                           dev[key] / om, 1e-7, error_estimate=est / om))

    A = fn.eval_named("A", g, it=it)
    V = fn.eval_named("V", g, it=it)
    Vinf = fn.eval_named("V_infty", g, it=it)
    series = {"r": r, "A": A.values, "V": V.values, "V_infty": Vinf.values}
    mono_tol = max(1e-9, 10.0 * est)
    out.append(_monotone("functionals.monotone.A", "A non-increasing", A.values, False, mono_tol))
    out.append(_monotone("functionals.monotone.V", "V non-increasing", V.values, False, mono_tol))
    AmV = A.values - 2 * (n - 1) * V.values
    out.append(_monotone("functionals.monotone.A_minus_2(n-1)V", "A - 2(n-1)V non-decreasing",
                         AmV, True, mono_tol))
    scaled = S ** (2 - n) * (A.values - om)
    out.append(_monotone("functionals.monotone.scaled_A", "(2 sn_k(r/2))^(2-n)(A - omega) non-decreasing",
                         scaled, True, np.maximum(1e-9, 10.0 * est * S ** (2 - n))))
    out.append(_record("functionals.bound.A", "A <= omega_{n-1}", float(np.max(A.values - om)), 1e-8))
    out.append(_record("functionals.bound.V", "V <= omega_{n-1}/n", float(np.max(V.values - om / n)), 1e-8))
    out.append(_record("functionals.order.A_le_nV", "A <= nV", float(np.max(A.values - n * V.values)), 1e-8))

    # limits at r -> 0
    for name, vals, target in (("A", A.values, om), ("V", V.values, om / n)):
        lim, spread = extrapolate_to_zero(r, vals)
        tol = max(1e-7 * om, 10.0 * spread)
        out.append(_record(f"functionals.limit.{name}", f"{name}(r) -> {target:.6g} as r -> 0",
                           abs(lim - target), tol, error_estimate=spread))
    # V_infty(0+) = int_M y^-n y'^2 (1 - v^2); the sublevel term vanishes in the limit
    _, whole = it.below(lambda s: s["y"] ** (-n) * s["y_p"] ** 2 * (1.0 - s["v_sq"]))
    lim, spread = extrapolate_to_zero(r, Vinf.values)
    out.append(_record("functionals.limit.V_infty", "V_infty(r) -> int_M y^-n |grad y|^2 (1 - v^2)",
                       abs(lim - whole), max(1e-7 * om, 10.0 * spread), error_estimate=spread))

    # closed-form derivatives
    h = float(r[1] - r[0])
    # scale floor: the differenced noise of a series with error est stays 1e-5 of it
    floor = max(1e-6 * om / g.m, 1.5e5 * est / h)
    dA = A.derivative_numeric
    checks = [
        ("A", "A' = -8 S^(n-3) C int_{b>=r} y^(2-2n) Q", dA, fn.derivative_closed_A(g, it=it)),
        ("scaled_A", "A' from d/dr S^(2-n)(A - omega) = 8 C S^(1-n) int_{b<=r} y^-n Q",
         dA, fn.derivative_closed_scaledA(g, A.values, it=it)),
        ("A_minus_2(n-1)V", "(A - 2(n-1)V)' = 8 C S^(-n-1) int_{b<=r} Q",
         dA - 2 * (n - 1) * V.derivative_numeric, fn.derivative_closed_AmV(g, it=it)),
        ("A_minus_(n-2)V_infty", "tn_k(r/2)(A' - (n-2)V_infty') = 4 int_{b<=r} y^-n Q",
         dA - (n - 2) * Vinf.derivative_numeric, fn.derivative_closed_AmVinf(g, it=it)),
        ("V_relation", "V' = (A - nV)/(2 tn_k(r/2))", V.derivative_numeric, fn.relation_V(A.values, V.values, it)),
        ("V_infty_relation", "V_infty' = (A - omega)/(2 tn_k(r/2))", Vinf.derivative_numeric,
         fn.relation_Vinf(A.values, it)),
    ]
    closed_AmV = checks[2][3]
    for beta in betas:
        tag = f"@{beta:.6g}"
        Ab = fn.eval_named("A_beta", g, beta, it=it)
        Vb = fn.eval_named("V_beta", g, beta, it=it)
        series[f"A_beta{tag}"] = Ab.values
        series[f"V_beta{tag}"] = Vb.values
        out.append(_monotone(f"functionals.monotone.A_beta{tag}", "A_beta non-increasing",
                             Ab.values, False, mono_tol))
        out.append(_monotone(f"functionals.monotone.V_beta{tag}", "V_beta non-increasing",
                             Vb.values, False, mono_tol))
        out.append(_monotone(f"functionals.monotone.A_beta_minus_2(n-2)V_beta{tag}",
                             "A_beta - 2(n-2)V_beta non-decreasing",
                             Ab.values - 2 * (n - 2) * Vb.values, True, mono_tol))
        out.append(_record(f"functionals.bound.V_beta{tag}", "V_beta <= omega_{n-1}/(n-2)",
                           float(np.max(Vb.values - om / (n - 2))), 1e-8))
        out.append(_record(f"functionals.order.A_beta_le_(n-2)V_beta{tag}", "A_beta <= (n-2) V_beta",
                           float(np.max(Ab.values - (n - 2) * Vb.values)), 1e-8))
        lim, spread = extrapolate_to_zero(r, Ab.values)
        out.append(_record(f"functionals.limit.A_beta{tag}", "A_beta(r) -> omega as r -> 0",
                           abs(lim - om), max(1e-7 * om, 10.0 * spread), error_estimate=spread))
        dAb = Ab.derivative_numeric
        checks += [
            (f"A_beta{tag}", "A_beta' as a flux through {b = r}", dAb, fn.derivative_closed_Abeta(g, beta, it=it)),
            (f"scaled_A_beta{tag}", "A_beta' from d/dr S^(2-n)(A_beta - omega)", dAb,
             fn.derivative_closed_scaledAbeta(g, beta, Ab.values, it=it)),
            (f"A_beta_minus_2(n-2)V_beta{tag}", "(A_beta - 2(n-2)V_beta)' closed form",
             dAb - 2 * (n - 2) * Vb.derivative_numeric, fn.derivative_closed_AbetamV(g, beta, it=it)),
            (f"V_beta_relation{tag}", "V_beta' = (A_beta - (n-2)V_beta)/(2 tn_k(r/2))",
             Vb.derivative_numeric, fn.relation_Vbeta(Ab.values, Vb.values, it)),
        ]
        if beta == 2.0:
            out.append(_record("functionals.A_beta2_equals_A", "A_2 = A",
                               float(np.max(np.abs(Ab.values - A.values))) / om, 1e-12))
    for name, statement, numeric, closed in checks:
        out.append(_derivative_check(f"functionals.derivative.{name}", statement, numeric, closed,
                                     floor, 1.5 * est / h))
    # rigidity detector: A' - 2(n-1)V' stays positive off the model
    if g.profile.is_model_space(g.k):
        out.append(_skip("functionals.rigidity_detector", "A' - 2(n-1)V' > 1e-10 off the model",
                         "model space"))
    else:
        worst = float(np.min(_interior(closed_AmV)))
        out.append(_record("functionals.rigidity_detector", "A' - 2(n-1)V' > 1e-10 off the model",
                           -worst, -1e-10))
    return out, series


# --- applications ------------------------------------------------------------------

def check_Am_identity(g: RadialGreen, A_m: float) -> CheckRecord:
    """``A(m) = n(n+2)k^2/32 int_M G^((4-n)/(2-n))`` by an independent adaptive quadrature."""
    w, n, k = g.profile, g.n, g.k
    p = (4 - n) / (2 - n)

    def density(rho: float) -> float:
        x = np.array([rho])
        return float(g.u_at(x)[0] ** p * w.f(x)[0] ** (n - 1))

    pts = [g.L * 1e-3, g.L * 0.5, g.L * (1 - 1e-3)]
    val, abserr = integrate.quad(density, 0.0, g.L, points=pts, epsabs=0.0, epsrel=1e-12, limit=500)
    rhs = n * (n + 2) * k * k / 32.0 * omega(n) * val
    rel = abs(A_m - rhs) / abs(rhs)
    return _record("applications.Am_identity", "A(m) = n(n+2)k^2/32 int_M G^((4-n)/(2-n))", rel, 1e-5,
                   error_estimate=abserr / max(val, 1e-300), detail=f"A(m) {A_m:.12g} vs {rhs:.12g}")


def check_bishop_dim4(g: RadialGreen, A_m: float) -> list[CheckRecord]:
    """Dimension-four Bishop comparison from ``A(m) = omega_3 vol(M) / vol(S^4_k)``."""
    statement_ratio = "A(m)/omega_3 = vol(M)/vol(S^4_k)"
    statement_bound = "vol(M) <= vol(S^4_k)"
    if g.n != 4:
        reason = f"dimension {g.n} != 4"
        return [_skip("applications.bishop_dim4.ratio", statement_ratio, reason),
                _skip("applications.bishop_dim4.volume_bound", statement_bound, reason)]
    vol = volume(g.profile)
    ref = model_sphere_volume(CurvatureParam(g.k, 4))
    ratio_vol = vol / ref
    ratio_A = A_m / omega(4)
    out = [
        _record("applications.bishop_dim4.ratio", statement_ratio, abs(ratio_A - ratio_vol), 1e-6,
                detail=f"vol ratio {ratio_vol:.12g}"),
        _record("applications.bishop_dim4.volume_bound", statement_bound, ratio_vol - 1.0, 1e-8,
                detail=f"vol ratio {ratio_vol:.12g}"),
    ]
    return out


def _nested_levels(r: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    edges = np.concatenate([[0.0], r])
    h = np.diff(edges)
    t = edges[:-1, None] + h[:, None] * GAUSS_NODES[None, :]
    return t, h[:, None] * GAUSS_WEIGHTS[None, :]


def check_volume_bounds(t: RadialFieldTable, it: fn.LevelIntegrator) -> list[CheckRecord]:
    """Level and sublevel volume bounds, the sublevel ``G`` bound and the gradient-flux bound."""
    g = t.green
    n, k = g.n, g.k
    om = omega(n)
    model = g.profile.is_model_space(k)
    S, C = it.S, it.C
    ok = C >= CS_FLOOR
    G_below, _ = it.below(lambda s: s["G"])
    mass = 0.25 * n * k * G_below
    level_vol = np.where(it.at_top, 0.0, it.level["vol"])
    out: list[CheckRecord] = []

    # quadrature error of the sublevel integrals, measured on the constant weight
    est = float(np.max(np.abs(fn.eval_I(1.0, g, it=it).values - om)))

    def bound(name: str, statement: str, lhs: NDArray[np.float64], rhs: NDArray[np.float64],
              mask: NDArray[np.bool_], amplification: NDArray[np.float64] | float = 1.0) -> None:
        # measured: worst margin violation in units of the allowed slack (pass when <= 1)
        margin = (lhs - rhs)[mask]
        noise = (10.0 * est * np.broadcast_to(amplification, lhs.shape))[mask]
        if not margin.size:
            out.append(_skip(f"applications.{name}", statement, "no admissible levels"))
            return
        allowed = 1e-8 * om + noise
        worst = float(np.min(margin))
        out.append(_record(f"applications.{name}", statement, float(np.max(-margin / allowed)), 1.0,
                           error_estimate=float(np.max(noise / allowed)) / 10.0,
                           detail=f"min slack {worst:.3e}"))
        if model:
            allowed_eq = 1e-7 * om + noise
            out.append(_record(f"applications.{name}.model_equality",
                               statement.replace(">=", "=").replace("<=", "="),
                               float(np.max(np.abs(margin) / allowed_eq)), 1.0,
                               detail=f"max |slack| {float(np.max(np.abs(margin))):.3e}"))

    with np.errstate(divide="ignore", invalid="ignore"):
        rhs_level = S ** (n - 1) / C * (om - mass)
    with np.errstate(divide="ignore"):
        amp_level = np.where(ok, S ** (n - 1) / np.where(ok, C, 1.0), 0.0)
    bound("level_volume_bound", "vol(b = r) >= S^(n-1) C^-1 (omega - (nk/4) int_{b<=r} G)",
          level_vol, rhs_level, ok, amp_level)

    # sublevel: outer integral over t in (0, r) on Gauss nodes of the level panels
    tn, tw = _nested_levels(it.r)
    inner_it = fn.LevelIntegrator(g, tn.ravel(), bfun=it.bfun)
    G_t, _ = inner_it.below(lambda s: s["G"])
    with np.errstate(divide="ignore", invalid="ignore"):
        inner_vals = inner_it.S ** (n - 1) / inner_it.C * (om - 0.25 * n * k * G_t)
    inner_vals = np.where(inner_it.C >= CS_FLOOR, inner_vals, 0.0)
    rhs_sub = np.cumsum((inner_vals.reshape(tn.shape) * tw).sum(axis=1))
    with np.errstate(divide="ignore"):
        amp_t = np.where(inner_it.C >= CS_FLOOR, inner_it.S ** (n - 1) / np.maximum(inner_it.C, CS_FLOOR), 0.0)
    amp_sub = np.cumsum((amp_t.reshape(tn.shape) * tw).sum(axis=1))
    vol_below, _ = it.below(lambda s: np.ones_like(s["rho"]))
    bound("sublevel_volume_bound", "vol(b <= r) >= int_0^r S^(n-1) C^-1 (omega - (nk/4) int_{b<=t} G) dt",
          vol_below, rhs_sub, np.ones_like(ok) if not model else ok, amp_sub)

    bound("sublevel_G_bound", "(nk/4) int_{b<=r} G >= omega (1 - cs_k^n(r/2))",
          mass, om * (1.0 - C**n), np.ones_like(ok))

    flux = np.where(it.at_top, 0.0, it.level["vol"] * t.bfun.derivative(it.rho))
    root = math.sqrt(k)
    r_capped = np.minimum(it.r, math.pi / root)
    cap = om * (np.sin(root * r_capped) / root) ** (n - 1)
    bound("gradient_flux_bound", "int_{b=r} |grad b| <= omega sn_k^(n-1)(r)", cap, flux, np.ones_like(ok))
    return out


# --- battery ---------------------------------------------------------------------------

def run_battery(w: WarpProfile, k: float | None = None,
                config: BatteryConfig = BatteryConfig()) -> VerificationReport:
    """Solve, tabulate and check everything for one manifold.

    ``k = None`` uses ``k_star``; ``config.inflate_k`` multiplies the chosen ``k``.
    """
    adm = ricci_admissibility(w)
    k_base = adm.k_star if k is None else float(k)
    k_run = k_base * config.inflate_k
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        g = solve(w, k_run, config.settings, mis_normalize=config.mis_normalize)
        t = build_fields(b_function(g))
        betas = tuple(config.betas) if config.betas is not None else default_betas(w.n)
        records: list[CheckRecord] = []
        records += _solver_checks(g)
        records += _b_checks(t)
        rig = rigidity_diagnostics(t)
        records += _rigidity_checks(t, rig)
        records += _identity_checks(t, betas, config.refinement)
        it = fn.LevelIntegrator(g, fn.level_grid(g, config.levels), bfun=t.bfun)
        func_records, series = _functional_checks(t, it, betas)
        records += func_records
        A_m = float(series["A"][-1])
        records.append(check_Am_identity(g, A_m))
        records += check_bishop_dim4(g, A_m)
        records += check_volume_bounds(t, it)

    records.append(_record("solver.k_admissible", "k <= k_star", k_run - adm.k_star,
                           1e-8 * abs(adm.k_star), detail=f"k_star {adm.k_star:.12g}"))
    names = [r.name for r in records]
    if len(names) != len(set(names)):
        raise RuntimeError("duplicate check names in battery")
    records.sort(key=lambda r: r.name)
    # tolerance budget: every tolerance is at least ten estimated errors
    budget = all(r.tolerance >= 10.0 * r.error_estimate for r in records
                 if not r.skipped and r.error_estimate > 0)
    params = {
        "n": w.n,
        "L": w.L,
        "k": k_run,
        "k_star": adm.k_star,
        **_family_parameters(w),
        "betas": list(betas),
        "levels": config.levels,
        "rtol": config.settings.rtol,
        "mis_normalize": config.mis_normalize,
        "inflate_k": config.inflate_k,
        "normalization_c": g.normalization_c,
        "m": g.m,
    }
    return VerificationReport(w.label, params, tuple(records), rig, bool(budget))
