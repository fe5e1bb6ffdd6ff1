#!/usr/bin/env python3
"""Measure the domination ladder Dirichlet <= Robin(rho) <= Neumann.

For a decreasing sequence of Robin coefficients the evolution grows
monotonically between the Dirichlet floor and the Neumann ceiling; the
script reports the worst componentwise excess |u_lower| - u_upper for each
adjacent pair (all should be <= 0 up to round-off), plus the predicted
verdicts for a non-ideal boundary subspace where domination fails.
"""

import argparse
import sys

import numpy as np

from coupledheat import analyzer as az, semigroup as sg
from coupledheat.forms import assemble, build_mesh


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rhos", nargs="*", type=float,
                        default=[8.0, 4.0, 2.0, 1.0, 0.5, 0.0])
    parser.add_argument("--n-elements", type=int, default=32)
    parser.add_argument("--n-data", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    mesh = build_mesh(args.n_elements)
    dt = mesh.h_max ** 2 / 2.0
    rng = np.random.default_rng(args.seed)
    data = rng.standard_normal((args.n_data, args.n_elements + 1, 1))

    ladder = ([az.preset("dirichlet", 1)]
              + [az.preset("robin", 1, rho=r) for r in args.rhos])
    print(f"{'lower':<18} {'upper':<18} {'predicted':>9} {'worst gap':>12}")
    for low, high in zip(ladder[:-1], ladder[1:]):
        pred = az.predict(low, [az.DominationTarget(high)])[0]
        obs = sg.sweep_domination(assemble(low, mesh), assemble(high, mesh),
                                  data, dt, 1.0, tol=1e-8)
        print(f"{low.name:<18} {high.name:<18} "
              f"{str(pred.predicted):>9} {obs.worst_violation:>12.2e}")

    kirchhoff = az.preset("kirchhoff", 2)
    neumann = az.preset("neumann", 2)
    pred = az.predict(kirchhoff, [az.DominationTarget(neumann)])[0]
    data2 = rng.standard_normal((args.n_data, args.n_elements + 1, 2))
    obs = sg.sweep_domination(assemble(kirchhoff, mesh),
                              assemble(neumann, mesh), data2, dt, 1.0,
                              tol=1e-8)
    print(f"\nnon-ideal case span{{(1,1)}} vs Neumann: predicted "
          f"{pred.predicted}, witness excess {obs.worst_violation:.3f} "
          f"at {obs.witness}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
