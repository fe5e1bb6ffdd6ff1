#!/usr/bin/env python3
"""Eigenvalue convergence study for the scalar presets.

Prints the first Dirichlet eigenvalue error against pi^2 under mesh
refinement (consistent vs lumped mass) and the fitted decay rate of the
mixed Dirichlet/Neumann problem against (pi/2)^2.
"""

import argparse
import sys

import numpy as np

from coupledheat import analyzer as az, semigroup as sg
from coupledheat.forms import assemble, build_mesh


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--levels", nargs="*", type=int,
                        default=[8, 16, 32, 64, 128])
    parser.add_argument("--decay-n", type=int, default=128)
    args = parser.parse_args(argv)

    print(f"{'n':>5} {'lambda1 (consistent)':>22} {'error':>12} "
          f"{'lambda1 (lumped)':>18} {'error':>12}")
    target = np.pi ** 2
    prev = {}
    for n in args.levels:
        form = assemble(az.preset("dirichlet", 1), build_mesh(n))
        row = []
        for mass in ("consistent", "lumped"):
            lam, _ = sg.eigenpairs(form, 1, mass=mass)[0]
            row.extend([lam, lam - target])
        print(f"{n:>5} {row[0]:>22.10f} {row[1]:>12.3e} "
              f"{row[2]:>18.10f} {row[3]:>12.3e}")
        if prev:
            ratios = (prev['c'] / row[1], prev['l'] / row[3])
            print(f"{'':>5} error ratios vs previous level: "
                  f"consistent {ratios[0]:.2f}, lumped {ratios[1]:.2f}")
        prev = {"c": row[1], "l": row[3]}

    form = assemble(az.preset("mixed_dn", 1), build_mesh(args.decay_n))
    traj = sg.evolve(form, np.ones((args.decay_n + 1, 1)), dt=0.004,
                     t_end=3.0)
    rate = sg.decay_rate(traj)
    print(f"\nmixed D/N decay rate at n={args.decay_n}: {rate:.6f} "
          f"(continuum (pi/2)^2 = {(np.pi / 2) ** 2:.6f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
