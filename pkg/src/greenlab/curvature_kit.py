"""Curvature-adapted trigonometry and closed forms on the round model space.

All functions accept scalars or numpy arrays and return the same shape.
The model space of curvature ``k`` in dimension ``n`` is the round sphere of
radius ``1/sqrt(k)``; its diameter ``pi/sqrt(k)`` bounds every distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

__all__ = [
    "CurvatureParam",
    "arcsn_k",
    "cs_k",
    "ct_k",
    "model_green",
    "model_sphere_volume",
    "omega",
    "s3_scaled_green",
    "sn_k",
    "tn_k",
]

# Below this value of x*sqrt(k) the sine is evaluated from its Taylor series.
_SERIES_CUTOFF = 1e-4
# Slack allowed on domain endpoints, relative to the natural scale.
_DOMAIN_SLACK = 1e-12


@dataclass(frozen=True)
class CurvatureParam:
    """Curvature scale ``k`` (1/length^2) and dimension ``n``."""

    k: float
    n: int

    def __post_init__(self) -> None:
        if not (self.k > 0 and math.isfinite(self.k)):
            raise ValueError(f"k must be a positive finite number, got {self.k!r}")
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n!r}")

    @property
    def diameter(self) -> float:
        """Diameter ``pi/sqrt(k)`` of the model sphere."""
        return math.pi / math.sqrt(self.k)


def _check_k(k: float) -> float:
    if not (k > 0 and math.isfinite(k)):
        raise ValueError(f"k must be positive, got {k!r}")
    return float(k)


def _as_array(x: ArrayLike) -> NDArray[np.float64]:
    return np.asarray(x, dtype=float)


def _check_interval(x: NDArray[np.float64], lo: float, hi: float, name: str) -> None:
    slack = _DOMAIN_SLACK * max(1.0, abs(hi))
    if np.any(np.isnan(x)) or np.any(x < lo - slack) or np.any(x > hi + slack):
        raise ValueError(f"{name} outside the domain [{lo}, {hi}]")


def _unwrap(value: NDArray[np.float64], like: ArrayLike) -> float | NDArray[np.float64]:
    return float(np.reshape(value, ())) if np.ndim(like) == 0 else value


def sn_k(k: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Return ``sin(x sqrt(k))/sqrt(k)`` for ``0 <= x <= pi/sqrt(k)``."""
    k = _check_k(k)
    xs = _as_array(x)
    _check_interval(xs, 0.0, math.pi / math.sqrt(k), "sn_k argument")
    root = math.sqrt(k)
    xs = np.atleast_1d(xs)
    theta = xs * root
    out = np.sin(theta) / root
    small = np.abs(theta) < _SERIES_CUTOFF
    if np.any(small):
        t2 = theta[small] ** 2
        series = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0 * (1.0 - t2 / 72.0)))
        out[small] = xs[small] * series
    return _unwrap(out, x)


def cs_k(k: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Return ``cos(x sqrt(k))`` for ``0 <= x <= pi/sqrt(k)``."""
    k = _check_k(k)
    xs = _as_array(x)
    _check_interval(xs, 0.0, math.pi / math.sqrt(k), "cs_k argument")
    return _unwrap(np.cos(xs * math.sqrt(k)), x)


def tn_k(k: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Return ``sn_k/cs_k`` on ``[0, pi/(2 sqrt(k)))``."""
    k = _check_k(k)
    xs = _as_array(x)
    half = 0.5 * math.pi / math.sqrt(k)
    if np.any(xs < 0) or np.any(xs >= half):
        raise ValueError(f"tn_k argument outside [0, {half})")
    return _unwrap(_as_array(sn_k(k, xs)) / np.cos(xs * math.sqrt(k)), x)


def ct_k(k: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Return ``cs_k/sn_k`` on ``(0, pi/sqrt(k))``."""
    k = _check_k(k)
    xs = _as_array(x)
    top = math.pi / math.sqrt(k)
    if np.any(xs <= 0) or np.any(xs >= top):
        raise ValueError(f"ct_k argument outside (0, {top})")
    return _unwrap(np.cos(xs * math.sqrt(k)) / _as_array(sn_k(k, xs)), x)


def arcsn_k(k: float, y: ArrayLike) -> float | NDArray[np.float64]:
    """Principal inverse of ``sn_k``: maps ``[0, 1/sqrt(k)]`` onto ``[0, pi/(2 sqrt(k))]``."""
    k = _check_k(k)
    ys = _as_array(y)
    root = math.sqrt(k)
    _check_interval(ys, 0.0, 1.0 / root, "arcsn_k argument")
    return _unwrap(np.arcsin(np.clip(ys * root, 0.0, 1.0)) / root, y)


def model_green(p: CurvatureParam, dist: ArrayLike) -> float | NDArray[np.float64]:
    """Green's function ``(2 sn_k(dist/2))^(2-n)`` of the model sphere."""
    ds = _as_array(dist)
    if np.any(ds <= 0):
        raise ValueError("model_green is singular at dist = 0")
    _check_interval(ds, 0.0, p.diameter, "distance")
    chord = 2.0 * _as_array(sn_k(p.k, 0.5 * ds))
    return _unwrap(chord ** (2 - p.n), dist)


def s3_scaled_green(k: float, r: ArrayLike) -> float | NDArray[np.float64]:
    """Green's function of ``-Laplacian + 3k/4`` on the unit 3-sphere, ``0 < k < 1``.

    Normalized so that ``r * G -> 1`` at the pole.
    """
    if not 0.0 < k < 1.0:
        raise ValueError(f"s3_scaled_green needs 0 < k < 1, got {k!r}")
    rs = _as_array(r)
    if np.any(rs <= 0) or np.any(rs >= math.pi) or np.any(np.isnan(rs)):
        raise ValueError("s3_scaled_green needs 0 < r < pi")
    a = math.sqrt(1.0 - 0.75 * k)
    cot = math.cos(math.pi * a) / math.sin(math.pi * a)
    value = (np.cos(a * rs) - cot * np.sin(a * rs)) / np.sin(rs)
    return _unwrap(value, r)


def _half_gamma(n: int) -> float:
    """Gamma(n/2) for a positive integer ``n`` by exact recursion."""
    if n % 2 == 0:
        return float(math.factorial(n // 2 - 1))
    value = math.sqrt(math.pi)
    for j in range(1, (n - 1) // 2 + 1):
        value *= j - 0.5
    return value


def omega(n: int) -> float:
    """Volume ``2 pi^(n/2) / Gamma(n/2)`` of the unit sphere in R^n."""
    if int(n) != n or n < 2:
        raise ValueError(f"omega needs an integer n >= 2, got {n!r}")
    n = int(n)
    return 2.0 * math.pi ** (n / 2) / _half_gamma(n)


def model_sphere_volume(p: CurvatureParam) -> float:
    """Volume ``omega_{n-1} * int_0^{pi/sqrt k} sn_k^{n-1}`` of the model sphere.

    The integral is the unit-sphere volume in one dimension higher, rescaled.
    """
    return omega(p.n + 1) * p.k ** (-p.n / 2)
