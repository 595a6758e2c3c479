"""Closed rotationally symmetric manifolds as warped products.

A profile is the metric ``d rho^2 + f(rho)^2 g_sphere`` on ``[0, L]`` with a
smooth pole at each end. The pole at ``rho = 0`` carries the singularity of
the Green's function; ``rho = L`` is the antipodal pole.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from . import expressions as ex
from .curvature_kit import CurvatureParam, omega

__all__ = [
    "Custom",
    "FamilyTag",
    "Model",
    "PerturbedSphere",
    "ProfileError",
    "RicciAdmissibility",
    "ScaledS3",
    "WarpProfile",
    "make_profile",
    "ricci_admissibility",
    "volume",
]

Radial = Callable[[ArrayLike], NDArray[np.float64]]

POLE_TOL = 1e-10
MAX_PERTURBATION = 0.2


class ProfileError(ValueError):
    """A warp function fails a smoothness or positivity condition."""


@dataclass(frozen=True)
class Model:
    """Round sphere of curvature ``k``: ``f = sn_k`` on ``[0, pi/sqrt k]``."""

    k: float


@dataclass(frozen=True)
class ScaledS3:
    """Unit round 3-sphere paired with the operator constant ``3k/4``, ``0 < k < 1``."""

    k: float


@dataclass(frozen=True)
class PerturbedSphere:
    """``f = sin(rho) (1 + eps sin^2 rho)`` on ``[0, pi]``."""

    eps: float


@dataclass(frozen=True)
class Custom:
    """User warp function given as expression trees for f, f', f''."""

    f: ex.Expr
    fp: ex.Expr
    fpp: ex.Expr
    L: float
    label: str = "custom"


FamilyTag = Union[Model, ScaledS3, PerturbedSphere, Custom]


@dataclass(frozen=True)
class WarpProfile:
    """Warp function ``f`` and its first three derivatives on ``[0, L]``.

    ``f3`` is only needed for pole limits (Frobenius start, Ricci limits).
    """

    n: int
    L: float
    f: Radial = field(repr=False)
    fp: Radial = field(repr=False)
    fpp: Radial = field(repr=False)
    f3: Radial = field(repr=False)
    family: FamilyTag = field(default_factory=lambda: Model(1.0))

    @property
    def label(self) -> str:
        fam = self.family
        if isinstance(fam, Model):
            return f"model_n{self.n}_k{fam.k:g}"
        if isinstance(fam, ScaledS3):
            return f"scaled_s3_k{fam.k:g}"
        if isinstance(fam, PerturbedSphere):
            return f"perturbed_n{self.n}_eps{fam.eps:g}"
        return f"{fam.label}_n{self.n}"

    @property
    def family_k(self) -> float | None:
        """The comparison constant the family is built around, if any."""
        fam = self.family
        if isinstance(fam, (Model, ScaledS3)):
            return fam.k
        return None

    def is_model_space(self, k: float) -> bool:
        """Whether this profile is the round sphere of curvature exactly ``k``."""
        fam = self.family
        if isinstance(fam, Model):
            return fam.k == k
        if isinstance(fam, ScaledS3):
            return k == 1.0
        if isinstance(fam, PerturbedSphere):
            return fam.eps == 0.0 and k == 1.0
        return False


def _model(k: float, n: int) -> WarpProfile:
    root = math.sqrt(k)

    def f(r: ArrayLike) -> NDArray[np.float64]:
        return np.sin(root * np.asarray(r, dtype=float)) / root

    def fp(r: ArrayLike) -> NDArray[np.float64]:
        return np.cos(root * np.asarray(r, dtype=float))

    def fpp(r: ArrayLike) -> NDArray[np.float64]:
        return -root * np.sin(root * np.asarray(r, dtype=float))

    def f3(r: ArrayLike) -> NDArray[np.float64]:
        return -k * np.cos(root * np.asarray(r, dtype=float))

    return WarpProfile(n, math.pi / root, f, fp, fpp, f3, Model(k))


def _perturbed(eps: float, n: int) -> WarpProfile:
    def f(r: ArrayLike) -> NDArray[np.float64]:
        s = np.sin(np.asarray(r, dtype=float))
        return s * (1.0 + eps * s * s)

    def fp(r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        s, c = np.sin(r), np.cos(r)
        return c * (1.0 + 3.0 * eps * s * s)

    def fpp(r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        s, c = np.sin(r), np.cos(r)
        return -s + eps * s * (6.0 * c * c - 3.0 * s * s)

    def f3(r: ArrayLike) -> NDArray[np.float64]:
        r = np.asarray(r, dtype=float)
        s, c = np.sin(r), np.cos(r)
        return -c + eps * c * (6.0 * c * c - 21.0 * s * s)

    return WarpProfile(n, math.pi, f, fp, fpp, f3, PerturbedSphere(eps))


def _custom(tag: Custom, n: int) -> WarpProfile:
    f_e, fp_e, fpp_e = (ex.parse(e) for e in (tag.f, tag.fp, tag.fpp))
    f3_e = ex.derivative(fpp_e)
    L = float(tag.L)
    if not (L > 0 and math.isfinite(L)):
        raise ProfileError(f"custom profile needs a positive length L, got {tag.L!r}")
    # the supplied derivatives are checked against symbolic differentiation
    probe = np.linspace(0.0, L, 257)
    for name, given, parent in (("f'", fp_e, f_e), ("f''", fpp_e, fp_e)):
        want = ex.evaluate(ex.derivative(parent), probe)
        got = ex.evaluate(given, probe)
        scale = max(1.0, float(np.max(np.abs(want))))
        if not np.all(np.isfinite(got)) or np.max(np.abs(got - want)) > 1e-9 * scale:
            raise ProfileError(f"supplied {name} is not the derivative of its parent expression")
    tag = Custom(f_e, fp_e, fpp_e, L, tag.label)
    return WarpProfile(
        n, L,
        lambda r: ex.evaluate(f_e, r),
        lambda r: ex.evaluate(fp_e, r),
        lambda r: ex.evaluate(fpp_e, r),
        lambda r: ex.evaluate(f3_e, r),
        tag,
    )


def _check_smoothness(w: WarpProfile) -> None:
    ends = np.array([0.0, w.L])
    f0, fL = w.f(ends)
    d0, dL = w.fp(ends)
    s0, sL = w.fpp(ends)
    conditions = [
        ("f(0) = 0", f0, 0.0),
        ("f(L) = 0", fL, 0.0),
        ("f'(0) = 1", d0, 1.0),
        ("f'(L) = -1", dL, -1.0),
        ("f''(0) = 0", s0, 0.0),
        ("f''(L) = 0", sL, 0.0),
    ]
    for name, got, want in conditions:
        if not abs(got - want) <= POLE_TOL:
            raise ProfileError(f"pole smoothness violated: {name} (got {got:.3e})")
    inner = np.linspace(0.0, w.L, 4097)[1:-1]
    if np.any(~(w.f(inner) > 0)):
        raise ProfileError("f must be positive on (0, L)")


def make_profile(tag: FamilyTag, n: int) -> WarpProfile:
    """Build and validate the warp profile of a family in dimension ``n``."""
    if int(n) != n or n < 3:
        raise ProfileError("n must be ≥ 3")
    n = int(n)
    if isinstance(tag, Model):
        CurvatureParam(tag.k, n)
        w = _model(float(tag.k), n)
    elif isinstance(tag, ScaledS3):
        if n != 3:
            raise ProfileError("the scaled S^3 family is three-dimensional")
        if not 0.0 < tag.k < 1.0:
            raise ProfileError(f"scaled S^3 needs 0 < k < 1, got {tag.k!r}")
        base = _model(1.0, 3)
        w = WarpProfile(3, base.L, base.f, base.fp, base.fpp, base.f3, tag)
    elif isinstance(tag, PerturbedSphere):
        if not abs(tag.eps) <= MAX_PERTURBATION:
            raise ProfileError(f"|eps| must be at most {MAX_PERTURBATION}, got {tag.eps!r}")
        w = _perturbed(float(tag.eps), n)
    elif isinstance(tag, Custom):
        w = _custom(tag, n)
    else:
        raise ProfileError(f"unknown family {tag!r}")
    _check_smoothness(w)
    return w


@dataclass(frozen=True)
class RicciAdmissibility:
    """Ricci eigenvalue minima divided by ``n - 1``; ``k_star`` is the best constant."""

    k_star: float
    radial_min: float
    tangential_min: float
    witness_rho: float

    @property
    def admissible(self) -> bool:
        return self.k_star > 0


def ricci_eigenvalues(w: WarpProfile, rho: ArrayLike) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Radial and tangential Ricci eigenvalues divided by ``n - 1``, for ``0 < rho < L``."""
    r = np.asarray(rho, dtype=float)
    f, fp, fpp = w.f(r), w.fp(r), w.fpp(r)
    n = w.n
    radial = -fpp / f
    tangential = (-fpp / f + (n - 2) * (1.0 - fp * fp) / (f * f)) / (n - 1)
    return radial, tangential


def ricci_admissibility(w: WarpProfile, points: int = 4096, pole_zone: float = 1e-3) -> RicciAdmissibility:
    """Scan the Ricci eigenvalues and return the largest ``k`` with ``Ric >= (n-1)k``.

    Chebyshev nodes closer than ``pole_zone * L`` to a pole are replaced by the
    pole limits ``-f'''(0)`` and ``f'''(L)``, where both eigenvalue formulas
    are 0/0.
    """
    j = np.arange(points)
    nodes = 0.5 * w.L * (1.0 - np.cos(math.pi * (j + 0.5) / points))
    margin = pole_zone * w.L
    nodes = nodes[(nodes > margin) & (nodes < w.L - margin)]
    radial, tangential = ricci_eigenvalues(w, nodes)
    lim0 = -float(w.f3(np.array([0.0]))[0])
    limL = float(w.f3(np.array([w.L]))[0])
    rho_all = np.concatenate([[0.0], nodes, [w.L]])
    radial = np.concatenate([[lim0], radial, [limL]])
    tangential = np.concatenate([[lim0], tangential, [limL]])
    both = np.minimum(radial, tangential)
    i = int(np.argmin(both))
    return RicciAdmissibility(
        k_star=float(both[i]),
        radial_min=float(radial.min()),
        tangential_min=float(tangential.min()),
        witness_rho=float(rho_all[i]),
    )


def volume(w: WarpProfile) -> float:
    """Riemannian volume ``omega_{n-1} int_0^L f^{n-1}``."""
    val, _ = integrate.quad(lambda r: float(w.f(np.array([r]))[0]) ** (w.n - 1),
                            0.0, w.L, epsabs=0.0, epsrel=1e-13, limit=400)
    return omega(w.n) * val
