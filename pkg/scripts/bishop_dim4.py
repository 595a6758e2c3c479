"""Dimension-four Bishop ratio from A(m) against the direct volume ratio.

    python3 scripts/bishop_dim4.py
"""

import csv
import sys

from greenlab import functionals as fn
from greenlab.curvature_kit import CurvatureParam, model_sphere_volume, omega
from greenlab.green_solver import solve
from greenlab.manifold import Model, PerturbedSphere, make_profile, ricci_admissibility, volume

CASES = [Model(0.5), Model(1.0), Model(2.0)] + [PerturbedSphere(e) for e in (0.01, 0.02, 0.05, 0.1, 0.2)]


def main() -> None:
    writer = csv.writer(sys.stdout)
    writer.writerow(["manifold", "k", "A_m_over_omega3", "volume_ratio", "difference"])
    for tag in CASES:
        w = make_profile(tag, 4)
        k = w.family_k or ricci_admissibility(w).k_star
        if k <= 0:
            writer.writerow([w.label, f"{k:.12g}", "inadmissible", "", ""])
            continue
        g = solve(w, k)
        A_m = fn.eval_named("A", g, r_grid=[g.m]).values[0]
        ratio_A = A_m / omega(4)
        ratio_vol = volume(w) / model_sphere_volume(CurvatureParam(k, 4))
        writer.writerow([w.label, f"{k:.12g}", f"{ratio_A:.15f}", f"{ratio_vol:.15f}",
                         f"{ratio_A - ratio_vol:.2e}"])


if __name__ == "__main__":
    main()
