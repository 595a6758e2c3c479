"""Level-set functionals of ``b`` and closed forms of their derivatives.

Every functional is a combination of a level-set term at ``{b = r}`` and
integrals over ``{b <= r}`` or ``{b >= r}``. Radially ``{b = r}`` is the
sphere ``rho = rho(r)`` and the integrals become one-dimensional with the
volume density ``omega_{n-1} f^(n-1)``. They are computed by seven-point
Gauss panels on the solver grid, cumulated once and completed by a partial
panel ending at ``rho(r)``.

Notation used throughout: ``S = 2 sn_k(r/2)`` and ``C = cs_k(r/2)`` at the
level, ``y = 2 sn_k(b/2)`` along the profile; ``2 tn_k(r/2) = S / C``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .curvature_kit import omega
from .green_solver import GAUSS_NODES, GAUSS_WEIGHTS, BFunction, RadialGreen, b_function, panel_nodes
from .radial_fields import beta_tilde, closed_fields

__all__ = [
    "DEFAULT_LEVELS",
    "FunctionalSeries",
    "LevelIntegrator",
    "RangeError",
    "derivative_closed_A",
    "derivative_closed_AbetamV",
    "derivative_closed_Abeta",
    "derivative_closed_AmV",
    "derivative_closed_AmVinf",
    "derivative_closed_scaledA",
    "derivative_closed_scaledAbeta",
    "eval_I",
    "eval_J",
    "eval_Jinf",
    "eval_W",
    "eval_named",
    "level_grid",
    "numeric_derivative",
    "relation_V",
    "relation_Vbeta",
    "relation_Vinf",
]

DEFAULT_LEVELS = 200
NAMES = ("A", "V", "A_beta", "V_beta", "V_infty")

Samples = dict[str, NDArray[np.float64]]
Weight = Union[float, Callable[[Samples], NDArray[np.float64]]]


class RangeError(ValueError):
    """A level value lies outside ``(0, m]``."""


def level_grid(g: RadialGreen, points: int = DEFAULT_LEVELS) -> NDArray[np.float64]:
    """``points`` levels uniform in ``b`` on ``[m/points, m]``."""
    return g.m * np.arange(1, points + 1) / points


def numeric_derivative(r: NDArray[np.float64], values: NDArray[np.float64]) -> NDArray[np.float64]:
    """Fourth-order central differences on a uniform grid, second order at the ends.

    Fewer than five levels fall back to second order; fewer than three give NaN.
    """
    f = np.asarray(values, dtype=float)
    if f.size < 3:
        return np.full_like(f, np.nan)
    h = float(r[1] - r[0])
    d = np.empty_like(f)
    if f.size < 5:
        d[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
        return d
    d[2:-2] = (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * h)
    d[1] = (f[2] - f[0]) / (2.0 * h)
    d[-2] = (f[-1] - f[-3]) / (2.0 * h)
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
    d[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    return d


def _samples(g: RadialGreen, rho: NDArray[np.float64]) -> Samples:
    s = closed_fields(g, rho)
    s["rho"] = rho
    s["G"] = g.u_at(rho)
    s["vol"] = omega(g.n) * g.profile.f(rho) ** (g.n - 1)
    return s


def _invert_b(bfun: BFunction, r: NDArray[np.float64]) -> NDArray[np.float64]:
    """``rho(r)`` by bisection inside the tabulated bracket, to ``1e-15 L``."""
    g = bfun.owner
    idx = np.clip(np.searchsorted(bfun.b, r), 1, bfun.rho.size - 1)
    lo, hi = bfun.rho[idx - 1].copy(), bfun.rho[idx].copy()
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        below = bfun.value(mid) < r
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(hi - lo) <= 1e-15 * g.L:
            break
    rho = 0.5 * (lo + hi)
    return np.where(r >= g.m, g.L, rho)


class LevelIntegrator:
    """Shared quadrature state for all functionals of one Green's function.

    Fields are sampled once on the Gauss nodes of every solver panel and of
    the partial panels ``[edge_j, rho(r)]``; each functional then costs a few
    array reductions.
    """

    def __init__(self, g: RadialGreen, r_grid: ArrayLike | None = None,
                 bfun: BFunction | None = None) -> None:
        self.g = g
        self.bfun = bfun if bfun is not None else b_function(g)
        r = level_grid(g) if r_grid is None else np.asarray(r_grid, dtype=float)
        if r.ndim != 1 or r.size == 0:
            raise RangeError("r_grid must be a non-empty 1-d array")
        if np.any(r <= 0) or np.any(r > g.m * (1.0 + 1e-12)):
            raise RangeError(f"levels must lie in (0, m] with m = {g.m:.12g}")
        self.r = r
        self.rho = _invert_b(self.bfun, np.minimum(r, g.m))
        root = math.sqrt(g.k)
        self.S = 2.0 * np.sin(0.5 * root * r) / root
        self.C = np.cos(0.5 * root * r)
        edges = np.concatenate([[0.0], g.grid, [g.L]])
        x, wts = panel_nodes(edges)
        self._full = _samples(g, x.ravel())
        self._full_w = wts.ravel()
        self._panels = x.shape
        j = np.clip(np.searchsorted(edges, self.rho, side="right") - 1, 0, edges.size - 2)
        from_edge = self.rho - edges[j]
        px = edges[j][:, None] + from_edge[:, None] * GAUSS_NODES[None, :]
        pw = from_edge[:, None] * GAUSS_WEIGHTS[None, :]
        self._part = _samples(g, px.ravel())
        self._part_w = pw.ravel()
        self._part_shape = px.shape
        self._j = j
        # the top level rho = L carries no level-set term; sample just inside instead
        self.level = _samples(g, np.minimum(self.rho, g.L * (1.0 - 1e-9)))
        self.at_top = self.rho >= g.L

    @property
    def n(self) -> int:
        return self.g.n

    @property
    def k(self) -> float:
        return self.g.k

    def weight(self, u: Weight, s: Samples) -> NDArray[np.float64]:
        return np.full_like(s["rho"], float(u)) if not callable(u) else np.asarray(u(s), dtype=float)

    def below(self, integrand: Callable[[Samples], NDArray[np.float64]]) -> tuple[NDArray[np.float64], float]:
        """``int_{b <= r} integrand`` for every level, and the integral over all of ``M``."""
        full = (integrand(self._full) * self._full["vol"] * self._full_w).reshape(self._panels).sum(axis=1)
        cum = np.concatenate([[0.0], np.cumsum(full)])
        part = (integrand(self._part) * self._part["vol"] * self._part_w).reshape(self._part_shape).sum(axis=1)
        return cum[self._j] + part, float(cum[-1])

    def above(self, integrand: Callable[[Samples], NDArray[np.float64]]) -> NDArray[np.float64]:
        """``int_{b >= r} integrand`` for every level."""
        lower, total = self.below(integrand)
        return total - lower

    def level_term(self, u: Weight) -> NDArray[np.float64]:
        """``int_{b = r} u |grad b| cs_k(b/2)`` = ``omega f^(n-1) u y'`` at ``rho(r)``."""
        s = self.level
        val = s["vol"] * self.weight(u, s) * s["y_p"]
        return np.where(self.at_top, 0.0, val)


@dataclass(frozen=True)
class FunctionalSeries:
    """A functional sampled on levels ``r``, with numerical and closed-form derivatives."""

    name: str
    r_grid: NDArray[np.float64] = field(repr=False)
    values: NDArray[np.float64] = field(repr=False)
    derivative_numeric: NDArray[np.float64] = field(repr=False)
    derivative_closed: NDArray[np.float64] | None = field(default=None, repr=False)
    metadata: dict[str, Any] = field(default_factory=dict)

    def with_closed(self, derivative: NDArray[np.float64], name: str | None = None) -> "FunctionalSeries":
        return FunctionalSeries(name or self.name, self.r_grid, self.values,
                                self.derivative_numeric, derivative, dict(self.metadata))


def _series(name: str, it: LevelIntegrator, values: NDArray[np.float64], **meta: Any) -> FunctionalSeries:
    meta.setdefault("manifold", it.g.profile.label)
    return FunctionalSeries(name, it.r, values, numeric_derivative(it.r, values), None, meta)


def _integrator(g: RadialGreen, r_grid: ArrayLike | None, it: LevelIntegrator | None) -> LevelIntegrator:
    if it is not None:
        return it
    return LevelIntegrator(g, r_grid)


def _eval_I(it: LevelIntegrator, u: Weight) -> NDArray[np.float64]:
    n, k = it.n, it.k
    bulk, _ = it.below(lambda s: it.weight(u, s) * s["G"])
    return it.S ** (1 - n) * it.level_term(u) + 0.25 * n * k * bulk


def _eval_J(it: LevelIntegrator, u: Weight) -> NDArray[np.float64]:
    n, k = it.n, it.k
    main, _ = it.below(lambda s: it.weight(u, s) * (s["y_p"] ** 2 - 0.25 * k * s["y"] ** 2))
    bulk, _ = it.below(lambda s: it.weight(u, s) * s["G"])
    return it.S ** (-n) * main + 0.25 * k * bulk


def _eval_W(it: LevelIntegrator, u: Weight) -> NDArray[np.float64]:
    n, k = it.n, it.k
    c = n * k / (n - 2)
    main, _ = it.below(
        lambda s: it.weight(u, s) / s["y"] ** 2 * (s["y_p"] ** 2 - 0.25 * c * s["y"] ** 2))
    bulk, _ = it.below(lambda s: it.weight(u, s) * s["G"])
    return it.S ** (2 - n) * main + 0.25 * c * bulk


def _eval_Jinf(it: LevelIntegrator, u: Weight) -> NDArray[np.float64]:
    n, k = it.n, it.k
    outer = it.above(lambda s: s["y"] ** (-n) * s["y_p"] ** 2 * (1.0 - it.weight(u, s)))
    # log(sn(r/2)/sn(b/2)) = log S - log y splits into two cumulative integrals
    plain, _ = it.below(lambda s: s["G"] * (it.weight(u, s) - 1.0))
    logged, _ = it.below(lambda s: s["G"] * (it.weight(u, s) - 1.0) * np.log(s["y"]))
    return outer + 0.25 * n * k * (np.log(it.S) * plain - logged)


def v_power(beta: float) -> Callable[[Samples], NDArray[np.float64]]:
    """Weight ``v^beta = (4 |grad sn_k(b/2)|^2 + k sn_k^2(b/2))^(beta/2)``."""
    if beta == 2.0:
        return lambda s: s["v_sq"]
    return lambda s: s["v_sq"] ** (0.5 * beta)


def eval_I(u: Weight, g: RadialGreen, r_grid: ArrayLike | None = None,
           it: LevelIntegrator | None = None) -> FunctionalSeries:
    """``I_u(r) = S^(1-n) C int_{b=r} u |grad b| + (nk/4) int_{b<=r} u G``."""
    it = _integrator(g, r_grid, it)
    return _series("I_generic", it, _eval_I(it, u))


def eval_J(u: Weight, g: RadialGreen, r_grid: ArrayLike | None = None,
           it: LevelIntegrator | None = None) -> FunctionalSeries:
    it = _integrator(g, r_grid, it)
    return _series("J_generic", it, _eval_J(it, u))


def eval_W(u: Weight, g: RadialGreen, r_grid: ArrayLike | None = None,
           it: LevelIntegrator | None = None) -> FunctionalSeries:
    it = _integrator(g, r_grid, it)
    return _series("W_generic", it, _eval_W(it, u))


def eval_Jinf(u: Weight, g: RadialGreen, r_grid: ArrayLike | None = None,
              it: LevelIntegrator | None = None) -> FunctionalSeries:
    it = _integrator(g, r_grid, it)
    return _series("Jinf_generic", it, _eval_Jinf(it, u))


def eval_named(name: str, g: RadialGreen, beta: float | None = None,
               r_grid: ArrayLike | None = None, it: LevelIntegrator | None = None) -> FunctionalSeries:
    """``A = I_{v^2}``, ``V = J_{v^2}``, ``A_beta = I_{v^beta}``, ``V_beta = W_{v^beta}``, ``V_infty = J^inf_{v^2}``."""
    if name not in NAMES:
        raise ValueError(f"unknown functional {name!r}; expected one of {NAMES}")
    it = _integrator(g, r_grid, it)
    if name in ("A_beta", "V_beta"):
        if beta is None or not beta >= 0:
            raise ValueError(f"{name} needs beta >= 0, got {beta!r}")
        u = v_power(float(beta))
        vals = _eval_I(it, u) if name == "A_beta" else _eval_W(it, u)
        return _series(f"{name}@{beta:g}", it, vals, beta=float(beta))
    u = v_power(2.0)
    vals = {"A": _eval_I, "V": _eval_J, "V_infty": _eval_Jinf}[name](it, u)
    return _series(name, it, vals)


# --- closed-form derivatives --------------------------------------------------

def _Q(s: Samples) -> NDArray[np.float64]:
    return s["Q"]


def _ricci_part(it: LevelIntegrator, beta: float) -> Callable[[Samples], NDArray[np.float64]]:
    n, k = it.n, it.k
    # |grad sn|^2 (|II0|^2 + Ric(nu,nu) - (n-1)k) with II0 = 0 radially
    return lambda s: s["v"] ** (beta - 2.0) * 0.25 * s["y_p"] ** 2 * (s["ric_nu"] - (n - 1) * k)


def _shape_part(it: LevelIntegrator, beta: float) -> Callable[[Samples], NDArray[np.float64]]:
    n, k = it.n, it.k
    # beta~ |B(nu)|^2 + (n-2)|B(nu)^T|^2 with B(nu)^T = 0 radially
    return lambda s: s["v"] ** (beta - 2.0) * beta_tilde(s, beta, n, k) * s["B_nu_nu"] ** 2


def derivative_closed_A(g: RadialGreen, r_grid: ArrayLike | None = None,
                       it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``A'(r) = -8 S^(n-3) C int_{b>=r} y^(2-2n) Q``."""
    it = _integrator(g, r_grid, it)
    n = it.n
    tail = it.above(lambda s: s["y"] ** (2 - 2 * n) * _Q(s))
    return -8.0 * it.S ** (n - 3) * it.C * tail


def derivative_closed_scaledA(g: RadialGreen, A: NDArray[np.float64], r_grid: ArrayLike | None = None,
                             it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``A'`` from the growth of ``S^(2-n)(A - omega)``: ``C (8 int_{b<=r} y^(-n) Q - (2-n)(A - omega)) / S``."""
    it = _integrator(g, r_grid, it)
    n = it.n
    inner, _ = it.below(lambda s: s["y"] ** (-n) * _Q(s))
    return it.C * (8.0 * inner - (2 - n) * (A - omega(n))) / it.S


def derivative_closed_AmV(g: RadialGreen, r_grid: ArrayLike | None = None,
                         it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``(A - 2(n-1)V)' = 8 C S^(-n-1) int_{b<=r} Q``."""
    it = _integrator(g, r_grid, it)
    inner, _ = it.below(_Q)
    return 8.0 * it.C * it.S ** (-it.n - 1) * inner


def derivative_closed_AmVinf(g: RadialGreen, r_grid: ArrayLike | None = None,
                            it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``(A - (n-2)V_infty)' = 8 C S^(-1) int_{b<=r} y^(-n) Q``."""
    it = _integrator(g, r_grid, it)
    inner, _ = it.below(lambda s: s["y"] ** (-it.n) * _Q(s))
    return 8.0 * it.C * inner / it.S


def derivative_closed_Abeta(g: RadialGreen, beta: float, r_grid: ArrayLike | None = None,
                           it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``A_beta'`` as a flux of ``y^(4-2n) grad v^beta`` through ``{b = r}``.

    Both integrals run over the superlevel set ``{b >= r}``, where the divergence
    theorem puts them when the flux is taken outward from ``{b = r}``.
    """
    it = _integrator(g, r_grid, it)
    n = it.n
    ric, shape = _ricci_part(it, beta), _shape_part(it, beta)
    first = it.above(lambda s: s["y"] ** (4 - 2 * n) * ric(s))
    second = it.above(lambda s: s["y"] ** (2 - 2 * n) * shape(s))
    return it.S ** (n - 3) * it.C * (-4.0 * beta * first - 4.0 * beta / (n - 1) * second)


def derivative_closed_scaledAbeta(g: RadialGreen, beta: float, A_beta: NDArray[np.float64],
                                 r_grid: ArrayLike | None = None,
                                 it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``A_beta'`` from the growth of ``S^(2-n)(A_beta - omega)``."""
    it = _integrator(g, r_grid, it)
    n = it.n
    ric, shape = _ricci_part(it, beta), _shape_part(it, beta)
    first, _ = it.below(lambda s: s["y"] ** (2 - n) * ric(s))
    second, _ = it.below(lambda s: s["y"] ** (-n) * shape(s))
    rhs = 4.0 * beta * first + 4.0 * beta / (n - 1) * second
    return it.C * (rhs - (2 - n) * (A_beta - omega(n))) / it.S


def derivative_closed_AbetamV(g: RadialGreen, beta: float, r_grid: ArrayLike | None = None,
                             it: LevelIntegrator | None = None) -> NDArray[np.float64]:
    """``(A_beta - 2(n-2)V_beta)'`` from integrals over ``{b <= r}``."""
    it = _integrator(g, r_grid, it)
    n = it.n
    ric, shape = _ricci_part(it, beta), _shape_part(it, beta)
    first, _ = it.below(ric)
    second, _ = it.below(lambda s: shape(s) / s["psi"])
    return it.C * it.S ** (1 - n) * (4.0 * beta * first + beta / (n - 1) * second)


def relation_V(A: NDArray[np.float64], V: NDArray[np.float64], it: LevelIntegrator) -> NDArray[np.float64]:
    """``V' = (A - nV) / (2 tn_k(r/2))``."""
    return it.C * (A - it.n * V) / it.S


def relation_Vinf(A: NDArray[np.float64], it: LevelIntegrator) -> NDArray[np.float64]:
    """``V_infty' = (A - omega) / (2 tn_k(r/2))``."""
    return it.C * (A - omega(it.n)) / it.S


def relation_Vbeta(A_beta: NDArray[np.float64], V_beta: NDArray[np.float64],
                   it: LevelIntegrator) -> NDArray[np.float64]:
    """``V_beta' = (A_beta - (n-2)V_beta) / (2 tn_k(r/2))``."""
    return it.C * (A_beta - (it.n - 2) * V_beta) / it.S
