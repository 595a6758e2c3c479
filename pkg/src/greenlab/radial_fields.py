"""Pointwise fields built from ``b`` in radial form, and identity residuals.

With ``y = 2 sn_k(b/2) = u^(1/(2-n))`` every field is a closed expression in
``y, y', y'', y'''``; higher derivatives of ``u`` are replaced using the
radial equation itself, so no field involves differencing of samples.

Residual operators compare such closed fields with a direct evaluation of
the left-hand side. By default the direct side uses closed derivatives as
well (an algebraic consistency check); with ``step`` or ``spacing`` set it
uses sixth-order central differences, which makes the residual a
discretization error that can be refined (see :func:`refinement_study`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.ndimage import maximum_filter1d

from .green_solver import BFunction, RadialGreen

__all__ = [
    "IDENTITY_RESIDUALS",
    "RadialFieldTable",
    "RefinementStudy",
    "ResidualField",
    "beta_tilde",
    "bochner_residual_L",
    "build_fields",
    "closed_fields",
    "grad_grad_sn_residual",
    "grad_v_identity_residual",
    "laplace_psi_residual",
    "laplace_v_beta",
    "radial_structure_residuals",
    "refinement_study",
]

POLE_EXCLUSION = 1e-3
# Refinement study: absolute spacings L/12, L/24, L/48 on the middle half of [0, L].
REFINEMENT_BASE = 1.0 / 12.0
REFINEMENT_LEVELS = 3
# Relative residual below which the difference side has reached the interpolation noise.
NOISE_FLOOR = 1e-7
MIN_ORDER = 4.0
# Scale floor for identities whose summands all vanish on the model, in units of k.
SCALE_FLOOR = 1e-6

FIELD_NAMES = (
    "psi", "psi_p", "psi_pp", "lap_psi", "grad_sn", "v", "v_sq", "B_nu_nu", "B_tan",
    "norm_B_sq", "mean_curv", "ric_nu", "ric_tan", "Q",
)


def closed_fields(g: RadialGreen, rho: NDArray[np.float64]) -> dict[str, NDArray[np.float64]]:
    """All fields at ``rho`` from the solution and the radial equation."""
    w = g.profile
    n, k, lam = g.n, g.k, g.lam
    f, fp, fpp = w.f(rho), w.fp(rho), w.fpp(rho)
    mc = fp / f  # f'/f
    mc_p = fpp / f - mc * mc
    q = g.log_derivative(rho)  # u'/u
    r2 = lam - (n - 1) * mc * q  # u''/u from the equation
    q_p = r2 - q * q
    r2_p = -(n - 1) * (mc_p * q + mc * q_p)
    p = -1.0 / (n - 2)
    y, _ = g.chord(rho)
    y1 = p * y * q
    bracket = (p - 1.0) * q * q + r2
    y2 = p * y * bracket
    y3 = p * y1 * bracket + p * y * (2.0 * (p - 1.0) * q * q_p + r2_p)

    psi = 0.25 * y * y
    psi_p = 0.5 * y * y1
    psi_pp = 0.5 * (y1 * y1 + y * y2)
    lap_psi = psi_pp + (n - 1) * mc * psi_p
    v_sq = y1 * y1 + 0.25 * k * y * y
    v_sq_p = 2.0 * y1 * y2 + 0.5 * k * y * y1
    v_sq_pp = 2.0 * y2 * y2 + 2.0 * y1 * y3 + 0.5 * k * (y1 * y1 + y * y2)
    # size of the terms that cancel inside (v^2)'', used as a residual scale
    v_sq_pp_terms = 2.0 * y2 * y2 + 2.0 * np.abs(y1 * y3) + 0.5 * k * (y1 * y1 + np.abs(y * y2))
    B_nu_nu = psi_pp - lap_psi / n
    B_tan = psi_p * mc - lap_psi / n
    norm_B_sq = B_nu_nu**2 + (n - 1) * B_tan**2
    ric_nu = -(n - 1) * fpp / f
    ric_tan = -fpp / f + (n - 2) * (1.0 - fp * fp) / (f * f)
    Q = norm_B_sq + psi_p**2 * (ric_nu - (n - 1) * k)
    return {
        "y": y, "y_p": y1, "y_pp": y2,
        "psi": psi, "psi_p": psi_p, "psi_pp": psi_pp, "lap_psi": lap_psi,
        "grad_sn": 0.5 * y1, "v_sq": v_sq, "v": np.sqrt(v_sq),
        "v_sq_p": v_sq_p, "v_sq_pp": v_sq_pp, "v_sq_pp_terms": v_sq_pp_terms,
        "B_nu_nu": B_nu_nu, "B_tan": B_tan, "norm_B_sq": norm_B_sq,
        "mean_curv": (n - 1) * mc, "ric_nu": ric_nu, "ric_tan": ric_tan, "Q": Q,
    }


@dataclass(frozen=True)
class RadialFieldTable:
    """Fields of ``psi = sn_k^2(b/2)`` and ``v`` tabulated on the solver grid.

    ``B_nu_nu`` and ``B_tan`` are the normal and tangential eigenvalues of the
    traceless Hessian of ``psi``; ``Q`` is the Bochner integrand
    ``|B|^2 + Ric(grad psi, grad psi) - (n-1)k |grad psi|^2``.
    """

    bfun: BFunction
    rho: NDArray[np.float64] = field(repr=False)
    values: dict[str, NDArray[np.float64]] = field(repr=False)

    @property
    def green(self) -> RadialGreen:
        return self.bfun.owner

    def __getattr__(self, name: str) -> NDArray[np.float64]:
        values = self.__dict__.get("values")
        if values is not None and name in values:
            return values[name]
        raise AttributeError(name)

    def at(self, rho: ArrayLike) -> dict[str, NDArray[np.float64]]:
        """Evaluate every field at arbitrary radii in ``(0, L)``."""
        return closed_fields(self.green, np.atleast_1d(np.asarray(rho, dtype=float)))

    def beta_tilde(self, beta: float) -> NDArray[np.float64]:
        return beta_tilde(self, beta)

    def interior(self) -> NDArray[np.bool_]:
        """Mask of grid points in the identity zone away from both poles."""
        L = self.green.L
        return (self.rho >= POLE_EXCLUSION * L) & (self.rho <= L - POLE_EXCLUSION * L)


def build_fields(b: BFunction) -> RadialFieldTable:
    """Tabulate all fields on the solver grid (poles excluded)."""
    g = b.owner
    return RadialFieldTable(bfun=b, rho=g.grid.copy(), values=closed_fields(g, g.grid))


def beta_tilde(t: RadialFieldTable | dict, beta: float, n: int | None = None,
               k: float | None = None) -> NDArray[np.float64]:
    """``1 + (beta-1)(n-1) + (n-1)(2-beta) k psi / v^2``."""
    if isinstance(t, RadialFieldTable):
        n, k, vals = t.green.n, t.green.k, t.values
    else:
        vals = t
    return 1.0 + (beta - 1.0) * (n - 1) + (n - 1) * (2.0 - beta) * k * vals["psi"] / vals["v_sq"]


@dataclass(frozen=True)
class ResidualField:
    """Pointwise identity residual with its local summand scale."""

    name: str
    rho: NDArray[np.float64] = field(repr=False)
    residual: NDArray[np.float64] = field(repr=False)
    scale: NDArray[np.float64] = field(repr=False)

    @property
    def sup_abs(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def sup_relative(self) -> float:
        """``sup |residual| / scale`` (NaN propagates as a failure)."""
        rel = np.abs(self.residual) / self.scale
        return float(np.nan) if np.any(np.isnan(rel)) else float(np.max(rel))


# Sixth-order central stencils for first and second derivatives.
_D1 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2 = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_OFFSETS = np.arange(-3, 4)


def _stencil(t: RadialFieldTable, rho: NDArray[np.float64], step: float, func) -> tuple:
    """Values, first and second derivatives of ``func(fields)`` by central differences.

    ``step > 0`` is relative (spacing ``step * min(rho, L - rho) / 3``); ``step < 0``
    requests the absolute spacing ``|step|``.
    """
    L = t.green.L
    if step < 0:
        h = np.full_like(rho, -step)
    else:
        h = step * np.minimum(rho, L - rho) / 3.0
    pts = rho[:, None] + h[:, None] * _OFFSETS[None, :]
    vals = func(t.at(pts.ravel())).reshape(pts.shape)
    d1 = vals @ _D1 / h
    d2 = vals @ _D2 / (h * h)
    return vals[:, 3], d1, d2


def _zone(t: RadialFieldTable, rho: ArrayLike | None) -> NDArray[np.float64]:
    return t.rho[t.interior()] if rho is None else np.asarray(rho, dtype=float)


def _scale(*terms: NDArray[np.float64], floor: float = 0.0, window: int = 9) -> NDArray[np.float64]:
    stacked = np.max(np.abs(np.vstack(terms)), axis=0)
    return np.maximum(maximum_filter1d(stacked, size=window, mode="nearest"), floor)


def _step_arg(step: float | None, spacing: float | None) -> float | None:
    if spacing is not None:
        if step is not None:
            raise ValueError("give either a relative step or an absolute spacing")
        return -float(spacing)
    return step


def laplace_psi_residual(t: RadialFieldTable, step: float | None = None,
                         rho: ArrayLike | None = None, spacing: float | None = None) -> ResidualField:
    """``Lap psi - (2n |grad sn_k(b/2)|^2 - (nk/2) psi)``."""
    g = t.green
    n, k = g.n, g.k
    r = _zone(t, rho)
    step = _step_arg(step, spacing)
    F = t.at(r)
    if step is None:
        d1, d2 = F["psi_p"], F["psi_pp"]
    else:
        _, d1, d2 = _stencil(t, r, step, lambda v: v["psi"])
    mc = F["mean_curv"]
    rhs_a = 2.0 * n * F["grad_sn"] ** 2
    rhs_b = 0.5 * n * k * F["psi"]
    res = d2 + mc * d1 - (rhs_a - rhs_b)
    return ResidualField("laplace_psi", r, res, _scale(d2, mc * d1, rhs_a, rhs_b))


def bochner_residual_L(t: RadialFieldTable, step: float | None = None,
                       rho: ArrayLike | None = None, spacing: float | None = None) -> ResidualField:
    """``L(v^2) - (2/psi) Q`` with ``L w = w'' + (n-1)(f'/f) w' + ((2-n)/psi) psi' w'``."""
    g = t.green
    n, k = g.n, g.k
    r = _zone(t, rho)
    step = _step_arg(step, spacing)
    F = t.at(r)
    if step is None:
        d1, d2 = F["v_sq_p"], F["v_sq_pp"]
    else:
        _, d1, d2 = _stencil(t, r, step, lambda v: v["v_sq"])
    psi, psi_p = F["psi"], F["psi_p"]
    drift = F["mean_curv"] * d1
    pull = (2 - n) / psi * psi_p * d1
    weight = 2.0 / psi
    parts = (weight * F["norm_B_sq"], weight * psi_p**2 * F["ric_nu"],
             weight * psi_p**2 * (n - 1) * k)
    res = d2 + drift + pull - (parts[0] + parts[1] - parts[2])
    return ResidualField("bochner_L", r, res,
                         _scale(d2, F["v_sq_pp_terms"], drift, pull, *parts, floor=SCALE_FLOOR * k))


def grad_v_identity_residual(t: RadialFieldTable, step: float | None = None,
                             rho: ArrayLike | None = None, spacing: float | None = None) -> ResidualField:
    """``|grad v|^2 - (1/psi - k/v^2) B(nu,nu)^2``; ``v'`` comes from ``v`` alone."""
    g = t.green
    k = g.k
    r = _zone(t, rho)
    step = _step_arg(step, spacing)
    F = t.at(r)
    if step is None:
        dv = F["v_sq_p"] / (2.0 * F["v"])
    else:
        _, dv, _ = _stencil(t, r, step, lambda v: v["v"])
    lhs = dv * dv
    a = F["B_nu_nu"] ** 2 / F["psi"]
    c = k * F["B_nu_nu"] ** 2 / F["v_sq"]
    return ResidualField("grad_v", r, lhs - (a - c), _scale(lhs, a, c, floor=SCALE_FLOOR * k))


def grad_grad_sn_residual(t: RadialFieldTable, step: float | None = None,
                          rho: ArrayLike | None = None, spacing: float | None = None) -> ResidualField:
    """``d/drho |grad sn|^2 - ((|grad sn|/sn) B(nu,nu) - (k/2) sn |grad sn|)``."""
    g = t.green
    k = g.k
    r = _zone(t, rho)
    step = _step_arg(step, spacing)
    F = t.at(r)
    gs = F["grad_sn"]
    if step is None:
        lhs = F["y_p"] * F["y_pp"] / 2.0
    else:
        _, lhs, _ = _stencil(t, r, step, lambda v: v["grad_sn"] ** 2)
    sn = 0.5 * F["y"]
    a = gs / sn * F["B_nu_nu"]
    c = 0.5 * k * sn * gs
    return ResidualField("grad_grad_sn", r, lhs - (a - c), _scale(lhs, a, c, floor=SCALE_FLOOR * k))


def laplace_v_beta(t: RadialFieldTable, beta: float, step: float | None = None,
                   rho: ArrayLike | None = None, spacing: float | None = None) -> tuple[NDArray[np.float64], ResidualField]:
    """Closed right-hand side for ``Lap v^beta`` and its residual against the direct Laplacian.

    Radially the traceless second fundamental form and the tangential part of
    ``B(nu)`` vanish, so only ``B(nu,nu)`` enters.
    """
    g = t.green
    n, k = g.n, g.k
    r = _zone(t, rho)
    step = _step_arg(step, spacing)
    F = t.at(r)
    v = F["v"]
    dv = F["v_sq_p"] / (2.0 * v)
    dvb = beta * v ** (beta - 1.0) * dv
    if step is None:
        dv_sq_pp = F["v_sq_pp"]
        d2v = (dv_sq_pp - 2.0 * dv * dv) / (2.0 * v)
        d1 = dvb
        d2 = beta * v ** (beta - 1.0) * d2v + beta * (beta - 1.0) * v ** (beta - 2.0) * dv * dv
    else:
        _, d1, d2 = _stencil(t, r, step, lambda x: x["v"] ** beta)
    lhs_a, lhs_b = d2, F["mean_curv"] * d1
    pre = 4.0 * beta * v ** (beta - 2.0) * F["grad_sn"] ** 2
    ric_part, flat_part = pre * F["ric_nu"], pre * (n - 1) * k
    drift = (n - 2) / F["psi"] * F["psi_p"] * dvb
    bt = beta_tilde(F, beta, n, k)
    shape = beta * v ** (beta - 2.0) / ((n - 1) * F["psi"]) * bt * F["B_nu_nu"] ** 2
    rhs = ric_part - flat_part + drift + shape
    res = lhs_a + lhs_b - rhs
    d2v_terms = (F["v_sq_pp_terms"] + 2.0 * dv * dv) / (2.0 * v)
    d2_terms = beta * v ** (beta - 1.0) * d2v_terms + beta * abs(beta - 1.0) * v ** (beta - 2.0) * dv * dv
    scale = _scale(lhs_a, d2_terms, lhs_b, ric_part, flat_part, drift, shape,
                   floor=SCALE_FLOOR * k * beta)
    return rhs, ResidualField(f"laplace_v_beta@{beta:g}", r, res, scale)


def radial_structure_residuals(t: RadialFieldTable) -> dict[str, ResidualField]:
    """Exact-zero structure of the radial reduction.

    * trace-free: ``B_nu_nu + (n-1) B_tan``
    * traceless second fundamental form: ``|grad psi| II0 = B_0 + B(nu,nu)/(n-1) g_0``,
      tangential eigenvalue ``B_tan + B_nu_nu/(n-1)``
    * tangential part of ``B(nu)``: the off-diagonal block, identically zero
    * ``|B|^2 - n/(n-1) |B(nu)|^2`` (which equals ``|grad psi|^2 |II0|^2`` here)
    """
    n = t.green.n
    mask = t.interior()
    r = t.rho[mask]
    Bn, Bt, nb = t.B_nu_nu[mask], t.B_tan[mask], t.norm_B_sq[mask]
    scale_b = _scale(Bn, (n - 1) * Bt, floor=1e-300)
    out = {
        "trace_free": ResidualField("trace_free", r, Bn + (n - 1) * Bt,
                                    np.maximum(scale_b, np.abs(t.lap_psi[mask]))),
        "II0_zero": ResidualField("II0_zero", r, Bt + Bn / (n - 1),
                                  np.maximum(scale_b, np.abs(t.lap_psi[mask]) / n)),
        "B_nu_tangential_zero": ResidualField("B_nu_tangential_zero", r, np.zeros_like(r),
                                              np.ones_like(r)),
        "norm_B_split": ResidualField("norm_B_split", r, nb - n / (n - 1) * Bn**2,
                                      np.maximum(_scale(nb, n / (n - 1) * Bn**2, floor=1e-300),
                                                 t.lap_psi[mask] ** 2 / n)),
    }
    return out


IDENTITY_RESIDUALS = {
    "laplace_psi": laplace_psi_residual,
    "bochner_L": bochner_residual_L,
    "grad_v": grad_v_identity_residual,
    "grad_grad_sn": grad_grad_sn_residual,
}


@dataclass(frozen=True)
class RefinementStudy:
    """Sup relative residuals of a difference-based check under halving of the spacing.

    A refinement pair passes when the observed order is at least ``MIN_ORDER``
    or when the finer residual is already below ``NOISE_FLOOR``.
    """

    name: str
    spacings: tuple[float, ...]
    residuals: tuple[float, ...]

    @property
    def orders(self) -> tuple[float, ...]:
        r = self.residuals
        return tuple(float(np.log2(r[i] / r[i + 1])) if r[i + 1] > 0 else float("inf")
                     for i in range(len(r) - 1))

    @property
    def pair_ok(self) -> tuple[bool, ...]:
        return tuple(bool(o >= MIN_ORDER or fine <= NOISE_FLOOR)
                     for o, fine in zip(self.orders, self.residuals[1:]))

    @property
    def passed(self) -> bool:
        return all(np.isfinite(self.residuals)) and all(self.pair_ok)


def refinement_study(t: RadialFieldTable, name: str, beta: float | None = None,
                     levels: int = REFINEMENT_LEVELS) -> RefinementStudy:
    """Run the difference form of one identity at spacings ``L/12 * 2^-j``.

    ``name`` is a key of ``IDENTITY_RESIDUALS`` or ``"laplace_v_beta"`` (with ``beta``).
    """
    L = t.green.L
    mid = t.rho[(t.rho >= 0.25 * L) & (t.rho <= 0.75 * L)]
    spacings = tuple(REFINEMENT_BASE * L * 0.5**j for j in range(levels))
    if name == "laplace_v_beta":
        if beta is None:
            raise ValueError("laplace_v_beta needs beta")
        res = [laplace_v_beta(t, beta, rho=mid, spacing=h)[1].sup_relative for h in spacings]
        label = f"laplace_v_beta@{beta:g}"
    else:
        fn = IDENTITY_RESIDUALS[name]
        res = [fn(t, rho=mid, spacing=h).sup_relative for h in spacings]
        label = name
    return RefinementStudy(label, spacings, tuple(res))
