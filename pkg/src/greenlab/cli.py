"""``greenlab solve|functionals|verify``: configuration, runs and frozen-schema output.

Exit codes: 0 success, 1 a verification check failed, 2 usage or infrastructure error.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import click
import numpy as np

from . import functionals as fn
from .green_solver import SolverSettings, b_function, solve
from .manifold import Custom, Model, PerturbedSphere, ScaledS3, WarpProfile, make_profile, ricci_admissibility, volume
from .radial_fields import build_fields
from .verify import SCHEMA_VERSION, BatteryConfig, default_betas, run_battery

FAMILIES = ("model", "perturbed", "scaled_s3", "custom")
CONFIG_KEYS = {"family", "n", "k", "eps", "beta", "grid", "rtol", "out", "format", "inject", "custom"}
CUSTOM_KEYS = {"f", "fp", "fpp", "L", "label"}
INJECT_KEYS = {"mis_normalize", "inflate_k"}
GREEN_COLUMNS = ("rho", "f", "u", "u_prime", "b", "b_prime", "v_sq")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class RunConfig:
    family: str = "model"
    n: int = 3
    k: float | None = None  # None means "auto"
    eps: tuple[float, ...] = ()
    betas: tuple[float, ...] | None = None
    grid: int = fn.DEFAULT_LEVELS
    rtol: float = SolverSettings().rtol
    out: str = "."
    fmt: str = "csv"
    inject: dict[str, float] = field(default_factory=dict)
    custom: dict[str, Any] | None = None

    def validate(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        if int(self.n) != self.n or self.n < 3:
            raise ConfigError("n must be ≥ 3")
        if self.k is not None and not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError(f"k must be positive or 'auto', got {self.k!r}")
        if self.eps and self.family != "perturbed":
            raise ConfigError("--eps applies only to the perturbed family")
        if self.family == "perturbed" and not self.eps:
            raise ConfigError("the perturbed family needs --eps")
        if self.family == "scaled_s3" and self.k is None:
            raise ConfigError("the scaled_s3 family needs a numeric --k in (0, 1)")
        if self.family == "custom" and self.custom is None:
            raise ConfigError("the custom family needs a 'custom' block in --config")
        if self.custom is not None:
            extra = set(self.custom) - CUSTOM_KEYS
            missing = {"f", "fp", "fpp", "L"} - set(self.custom)
            if extra or missing:
                raise ConfigError(f"custom block: unknown keys {sorted(extra)}, missing {sorted(missing)}")
        if self.betas is not None and any(not b > 0 for b in self.betas):
            raise ConfigError("beta values must be positive")
        if self.grid < 8:
            raise ConfigError("grid must have at least 8 levels")
        if not 0 < self.rtol < 1e-3:
            raise ConfigError(f"rtol must lie in (0, 1e-3), got {self.rtol!r}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.fmt!r}")
        bad = set(self.inject) - INJECT_KEYS
        if bad:
            raise ConfigError(f"unknown --inject keys {sorted(bad)}")
        return self


@dataclass(frozen=True)
class Run:
    profile: WarpProfile
    k: float | None
    out: Path


def _parse_floats(text: str, what: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse {what} list {text!r}") from exc


def _parse_k(value: Any) -> float | None:
    if value is None or (isinstance(value, str) and value.strip().lower() == "auto"):
        return None
    try:
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"k must be a number or 'auto', got {value!r}") from exc


def _parse_inject(items: Any) -> dict[str, float]:
    if isinstance(items, dict):
        pairs = items.items()
    else:
        pairs = []
        for item in items:
            key, sep, val = str(item).partition("=")
            if not sep:
                raise ConfigError(f"--inject expects key=value, got {item!r}")
            pairs.append((key.strip(), val))
    try:
        return {str(k): float(v) for k, v in pairs}
    except ValueError as exc:
        raise ConfigError(f"--inject values must be numbers: {exc}") from exc


def _load_config(path: str | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return data


def build_config(ctx: click.Context, **flags: Any) -> RunConfig:
    """Merge the JSON config with flags; flags given on the command line win."""
    data = _load_config(flags.pop("config"))
    given = {name for name in flags
             if ctx.get_parameter_source(name) is not click.core.ParameterSource.DEFAULT}

    def pick(name: str, key: str | None = None) -> Any:
        key = key or name
        if name in given or key not in data:
            return flags[name]
        return data[key]

    eps = pick("eps")
    beta = pick("beta")
    inject = pick("inject")
    cfg = RunConfig(
        family=str(pick("family")),
        n=int(pick("n")),
        k=_parse_k(pick("k")),
        eps=eps if isinstance(eps, tuple) else
        (_parse_floats(eps, "eps") if isinstance(eps, str) else
         tuple(float(e) for e in (eps if isinstance(eps, list) else [eps]))) if eps not in (None, "") else (),
        betas=(beta if isinstance(beta, tuple) else
               _parse_floats(beta, "beta") if isinstance(beta, str) else tuple(float(b) for b in beta))
        if beta not in (None, "") else None,
        grid=int(pick("grid")),
        rtol=float(pick("rtol")),
        out=str(pick("out")),
        fmt=str(pick("fmt", "format")),
        inject=_parse_inject(inject or ()),
        custom=data.get("custom"),
    )
    return cfg.validate()


def resolve_runs(cfg: RunConfig) -> list[Run]:
    """One run per manifold; an eps sweep writes into one subdirectory per value."""
    out = Path(cfg.out)
    if cfg.family == "model":
        k = 1.0 if cfg.k is None else cfg.k
        return [Run(make_profile(Model(k), cfg.n), k, out)]
    if cfg.family == "scaled_s3":
        assert cfg.k is not None
        return [Run(make_profile(ScaledS3(cfg.k), cfg.n), cfg.k, out)]
    if cfg.family == "custom":
        c = cfg.custom or {}
        tag = Custom(c["f"], c["fp"], c["fpp"], float(c["L"]), str(c.get("label", "custom")))
        return [Run(make_profile(tag, cfg.n), cfg.k, out)]
    runs = []
    for eps in cfg.eps:
        w = make_profile(PerturbedSphere(eps), cfg.n)
        runs.append(Run(w, cfg.k, out / w.label if len(cfg.eps) > 1 else out))
    return runs


# --- emission ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for row in zip(*columns.values()):
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def json_text(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False) + "\n"


def _table(columns: dict[str, np.ndarray], path_stem: Path, fmt: str, meta: dict[str, Any]) -> Path:
    if fmt == "csv":
        path = path_stem.with_suffix(".csv")
        write_atomic(path, csv_text(columns))
    else:
        path = path_stem.with_suffix(".json")
        write_atomic(path, json_text({**meta, "columns": {k: list(map(float, v)) for k, v in columns.items()}}))
    return path


def _settings(cfg: RunConfig) -> SolverSettings:
    return replace(SolverSettings(), rtol=cfg.rtol)


def _solve_run(run: Run, cfg: RunConfig):
    w = run.profile
    adm = ricci_admissibility(w)
    k = adm.k_star if run.k is None else run.k
    k *= cfg.inject.get("inflate_k", 1.0)
    g = solve(w, k, _settings(cfg), mis_normalize=cfg.inject.get("mis_normalize", 1.0))
    return g, adm


# --- commands -------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig, run: Run) -> int:
    g, adm = _solve_run(run, cfg)
    bfun = b_function(g)
    t = build_fields(bfun)
    rho = g.grid
    columns = {
        "rho": rho, "f": g.profile.f(rho), "u": g.u, "u_prime": g.u_prime,
        "b": bfun.value(rho), "b_prime": bfun.derivative(rho), "v_sq": t.v_sq,
    }
    meta = {"schema_version": SCHEMA_VERSION, "manifold": g.profile.label}
    _table(columns, run.out / "green", cfg.fmt, meta)
    summary = {
        **meta,
        "n": g.n,
        "L": g.L,
        "k": g.k,
        "k_star": adm.k_star,
        "normalization_c": g.normalization_c,
        "m": g.m,
        "volume": volume(g.profile),
        "diagnostics": g.diagnostics,
    }
    write_atomic(run.out / "solve.json", json_text(summary))
    return EXIT_OK


def functional_columns(g, betas: tuple[float, ...], levels: int) -> dict[str, np.ndarray]:
    """The frozen functionals.csv schema."""
    it = fn.LevelIntegrator(g, fn.level_grid(g, levels))
    n = g.n
    A = fn.eval_named("A", g, it=it)
    V = fn.eval_named("V", g, it=it)
    Vinf = fn.eval_named("V_infty", g, it=it)
    cols: dict[str, np.ndarray] = {"r": it.r, "A": A.values, "V": V.values}
    beta_series = [(b, fn.eval_named("A_beta", g, b, it=it), fn.eval_named("V_beta", g, b, it=it)) for b in betas]
    for b, Ab, Vb in beta_series:
        cols[f"A_beta@{b:.6g}"] = Ab.values
        cols[f"V_beta@{b:.6g}"] = Vb.values
    cols["V_infty"] = Vinf.values
    cols["dA_numeric"] = A.derivative_numeric
    cols["dA_paper"] = fn.derivative_closed_A(g, it=it)
    cols["dA_scaled_paper"] = fn.derivative_closed_scaledA(g, A.values, it=it)
    cols["dAmV_numeric"] = A.derivative_numeric - 2 * (n - 1) * V.derivative_numeric
    cols["dAmV_paper"] = fn.derivative_closed_AmV(g, it=it)
    cols["dV_numeric"] = V.derivative_numeric
    cols["dV_relation"] = fn.relation_V(A.values, V.values, it)
    cols["dV_infty_numeric"] = Vinf.derivative_numeric
    cols["dV_infty_relation"] = fn.relation_Vinf(A.values, it)
    for b, Ab, Vb in beta_series:
        tag = f"@{b:.6g}"
        cols[f"dA_beta{tag}_numeric"] = Ab.derivative_numeric
        cols[f"dA_beta{tag}_paper"] = fn.derivative_closed_Abeta(g, b, it=it)
        cols[f"dAbetamV{tag}_numeric"] = Ab.derivative_numeric - 2 * (n - 2) * Vb.derivative_numeric
        cols[f"dAbetamV{tag}_paper"] = fn.derivative_closed_AbetamV(g, b, it=it)
        cols[f"dV_beta{tag}_numeric"] = Vb.derivative_numeric
        cols[f"dV_beta{tag}_relation"] = fn.relation_Vbeta(Ab.values, Vb.values, it)
    return cols


def cmd_functionals(cfg: RunConfig, run: Run) -> int:
    g, _ = _solve_run(run, cfg)
    betas = cfg.betas if cfg.betas is not None else default_betas(g.n)
    cols = functional_columns(g, tuple(betas), cfg.grid)
    meta = {"schema_version": SCHEMA_VERSION, "manifold": g.profile.label}
    _table(cols, run.out / "functionals", cfg.fmt, meta)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, run: Run) -> int:
    config = BatteryConfig(
        betas=cfg.betas, levels=cfg.grid, settings=_settings(cfg),
        mis_normalize=cfg.inject.get("mis_normalize", 1.0),
        inflate_k=cfg.inject.get("inflate_k", 1.0),
    )
    report = run_battery(run.profile, run.k, config)
    write_atomic(run.out / "report.json", json_text(report.to_dict()))
    write_atomic(run.out / "report.txt", report.to_text())
    click.echo(f"{report.manifold}: {'PASS' if report.passed else 'FAIL'} "
               f"({len(report.failures)} failing of {len(report.records)})")
    return EXIT_OK if report.passed else EXIT_FAIL


def _fail(kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}, ensure_ascii=False), err=True)


def _run_all(command, ctx: click.Context, flags: dict[str, Any]) -> None:
    try:
        cfg = build_config(ctx, **flags)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            runs = resolve_runs(cfg)
            codes = [command(cfg, run) for run in runs]
    except (ConfigError, ValueError) as exc:
        _fail(type(exc).__name__, str(exc))
        ctx.exit(EXIT_USAGE)
    except (RuntimeError, ArithmeticError, OSError) as exc:
        _fail(type(exc).__name__, str(exc))
        ctx.exit(EXIT_USAGE)
    ctx.exit(max(codes) if codes else EXIT_OK)


def _common(func):
    options = [
        click.option("--family", type=click.Choice(FAMILIES), default="model", show_default=True),
        click.option("--n", "n", type=int, default=3, show_default=True, help="dimension, at least 3"),
        click.option("--k", "k", default="auto", show_default=True, help="comparison constant or 'auto' (k_star)"),
        click.option("--eps", default=None, help="perturbation size; a comma list sweeps"),
        click.option("--beta", default=None, help="comma list of beta values"),
        click.option("--grid", type=int, default=fn.DEFAULT_LEVELS, show_default=True, help="number of levels r"),
        click.option("--rtol", type=float, default=SolverSettings().rtol, show_default=True),
        click.option("--out", type=click.Path(file_okay=False), default=".", show_default=True),
        click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--inject", multiple=True, help="test hooks: mis_normalize=..., inflate_k=..."),
        click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON run configuration"),
    ]
    for opt in reversed(options):
        func = opt(func)
    return func


@click.group()
def main() -> None:
    """Green's function gradient estimates and monotonicity checks on rotationally symmetric manifolds."""


@main.command("solve")
@_common
@click.pass_context
def solve_cmd(ctx: click.Context, **flags: Any) -> None:
    """Solve for G and write green.csv and solve.json."""
    _run_all(cmd_solve, ctx, flags)


@main.command("functionals")
@_common
@click.pass_context
def functionals_cmd(ctx: click.Context, **flags: Any) -> None:
    """Tabulate A, V, A_beta, V_beta, V_infty and derivative cross-checks."""
    _run_all(cmd_functionals, ctx, flags)


@main.command("verify")
@_common
@click.pass_context
def verify_cmd(ctx: click.Context, **flags: Any) -> None:
    """Run the verification battery; exit 1 if any check fails."""
    _run_all(cmd_verify, ctx, flags)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
