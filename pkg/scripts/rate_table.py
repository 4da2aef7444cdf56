#!/usr/bin/env python3
"""Fitted versus predicted error exponents for a power-type diagonal problem.

Runs both parameter choice rules on a_j = j^-a_power, r_j = 1 and prints one
line per (rule, error norm).  Use t < 1 for the non-oversmoothing regime and
1 < t < 2 (with --rule discrepancy) for oversmoothing.
"""
import argparse

import numpy as np

from l1rates.operators import ForwardOperator
from l1rates.paramchoice import DiscrepancyConfig
from l1rates.rates import RateExperimentConfig, run_rate_experiment
from l1rates.seqspace import WeightSystem


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1024)
    ap.add_argument("--a-power", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=0.5)
    ap.add_argument("--p", type=float, default=1.5)
    ap.add_argument("--rho", type=float, default=100.0)
    ap.add_argument("--rule", choices=["a_priori", "discrepancy", "both"], default="both")
    ap.add_argument("--deltas", type=float, nargs=3, default=[1e-1, 1e-5, 9], metavar=("HI", "LO", "NUM"))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    ws = WeightSystem.power(args.n, args.a_power, 0.0)
    op = ForwardOperator.diagonal(ws)
    deltas = np.geomspace(args.deltas[0], args.deltas[1], int(args.deltas[2]))
    rules = ["a_priori", "discrepancy"] if args.rule == "both" else [args.rule]
    print("rule,norm,fitted,theory,deviation")
    for rule in rules:
        cfg = RateExperimentConfig(ws, op, args.t, args.rho, deltas, p_report=args.p, rule=rule, seed=args.seed,
                                   discrepancy=DiscrepancyConfig(1.2, 2.0))
        rep = run_rate_experiment(cfg)
        for k, dev in sorted(rep.deviations().items()):
            print(f"{rule},{k},{rep.fitted_slopes[k]:.4f},{rep.theory_slopes[k]:.4f},{dev:.4f}")


if __name__ == "__main__":
    main()
