"""Observed error of the solver and functionals as the integrator tolerance and level count vary.

    python3 scripts/convergence_study.py --n 4 --k 1.0
"""

import argparse
import csv
import sys
from dataclasses import replace

import numpy as np

from greenlab import functionals as fn
from greenlab.curvature_kit import CurvatureParam, model_green, omega
from greenlab.green_solver import SolverError, SolverSettings, solve
from greenlab.manifold import Model, make_profile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=float, default=1.0)
    args = ap.parse_args()
    w = make_profile(Model(args.k), args.n)
    om = omega(args.n)
    writer = csv.writer(sys.stdout)
    writer.writerow(["rtol", "levels", "u_rel_error", "A_error", "V_error", "normalization_spread"])
    for rtol in (1e-7, 1e-9, 1e-10, 1e-11, 1e-12):
        try:
            g = solve(w, args.k, replace(SolverSettings(), rtol=rtol))
        except SolverError as exc:
            writer.writerow([rtol, "", "", "", "", f"rejected: {exc}"])
            continue
        rho = g.grid[g.grid >= 0.01 * g.L]
        u_err = float(np.max(np.abs(g.u_at(rho) / model_green(CurvatureParam(args.k, args.n), rho) - 1)))
        for levels in (25, 100, 400):
            it = fn.LevelIntegrator(g, fn.level_grid(g, levels))
            A = fn.eval_named("A", g, it=it).values
            V = fn.eval_named("V", g, it=it).values
            writer.writerow([rtol, levels, f"{u_err:.2e}", f"{np.max(np.abs(A - om)):.2e}",
                             f"{np.max(np.abs(V - om / args.n)):.2e}",
                             f"{g.diagnostics['normalization_spread']:.2e}"])


if __name__ == "__main__":
    main()
