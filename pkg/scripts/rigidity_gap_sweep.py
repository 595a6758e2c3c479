"""Rigidity gap 1 - sup v^2 (interior zone) against the perturbation size.

    python3 scripts/rigidity_gap_sweep.py --n 3 --eps 0,0.01,0.02,0.05,0.1,0.2
"""

import argparse
import csv
import sys

from greenlab.manifold import Model, PerturbedSphere, make_profile, ricci_admissibility
from greenlab.verify import BatteryConfig, run_battery


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=3)
    ap.add_argument("--eps", default="0,0.01,0.02,0.05,0.1,0.2")
    args = ap.parse_args()
    writer = csv.writer(sys.stdout)
    writer.writerow(["eps", "k_star", "gap", "sup_norm_B", "battery_passed", "failing"])
    config = BatteryConfig(refinement=False)
    for eps in (float(e) for e in args.eps.split(",")):
        tag = Model(1.0) if eps == 0 else PerturbedSphere(eps)
        w = make_profile(tag, args.n)
        k_star = ricci_admissibility(w).k_star
        if k_star <= 0:
            writer.writerow([eps, f"{k_star:.12g}", "", "", "inadmissible", ""])
            continue
        rep = run_battery(w, 1.0 if eps == 0 else None, config)
        rig = rep.rigidity
        writer.writerow([eps, f"{rep.parameters['k']:.12g}", f"{rig['gap']:.6e}", f"{rig['sup_norm_B']:.6e}",
                         rep.passed, len(rep.failures)])


if __name__ == "__main__":
    main()
