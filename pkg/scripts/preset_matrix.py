#!/usr/bin/env python3
"""Run the full prediction/verification matrix over the boundary-condition
presets and print one verdict row per (preset, m, property).

Example:
    python scripts/preset_matrix.py --m 1 2 3 --n-elements 32 --t-end 0.5
"""

import argparse
import sys

from coupledheat import analyzer as az


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--presets", nargs="*",
                        default=["dirichlet", "neumann", "kirchhoff",
                                 "anti_kirchhoff", "mixed_dn"])
    parser.add_argument("--m", nargs="*", type=int, default=[1, 2, 3])
    parser.add_argument("--n-elements", type=int, default=32)
    parser.add_argument("--t-end", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    config = az.SimConfig(n=args.n_elements, t_end=args.t_end,
                          n_random=20, witness_n_random=100, seed=args.seed)
    print(f"{'preset':<16} {'m':>2} {'property':<20} {'predicted':>9} "
          f"{'verdict':<24} worst")
    refuted = 0
    for name in args.presets:
        for m in args.m:
            scenario = az.preset(name, m)
            predictions = az.predict(scenario,
                                     az.default_targets(scenario))
            report = az.verify(scenario, predictions, config)
            for row in report.rows:
                worst = ("-" if row.observation is None
                         else f"{row.observation.worst_violation:.2e}")
                print(f"{name:<16} {m:>2} {row.prediction.property:<20} "
                      f"{str(row.prediction.predicted):>9} "
                      f"{row.verdict:<24} {worst}")
                refuted += row.verdict == az.VERDICT_REFUTED
    print(f"\nrefuted predictions: {refuted}")
    return 1 if refuted else 0


if __name__ == "__main__":
    sys.exit(main())
