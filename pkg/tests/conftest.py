from __future__ import annotations

import functools
import warnings

from greenlab.green_solver import b_function, solve
from greenlab.manifold import Model, PerturbedSphere, ScaledS3, make_profile, ricci_admissibility
from greenlab.radial_fields import build_fields

MODEL_CASES = [(n, k) for n in (3, 4, 5) for k in (0.5, 1.0, 2.0)]
PERTURBED_CASES = [(n, eps) for n in (3, 4) for eps in (0.02, 0.05, 0.1)]
SCALED_KS = (0.25, 0.5, 0.75)


@functools.lru_cache(maxsize=None)
def green(tag, n: int, k: float | None = None):
    """Solved Green's function, cached across tests; ``k=None`` means k_star."""
    w = make_profile(tag, n)
    if k is None:
        k = ricci_admissibility(w).k_star
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return solve(w, k)


@functools.lru_cache(maxsize=None)
def fields(tag, n: int, k: float | None = None):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return build_fields(b_function(green(tag, n, k)))


def model(n: int, k: float):
    return green(Model(k), n, k)


def perturbed(n: int, eps: float):
    return green(PerturbedSphere(eps), n)


def scaled(k: float):
    return green(ScaledS3(k), 3, k)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, passed: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
