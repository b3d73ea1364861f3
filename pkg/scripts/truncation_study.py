"""Magnus truncation error versus order for random bounded pulses.

Compares the simplex (default) and rectangle tie weights on the drift + drive
qubit and reports how often the error sequence is non-increasing in the order.
"""
import argparse

import numpy as np

from meqoc.algebra import S_X, S_Z
from meqoc.magnus import SystemSpec, Term
from meqoc.pipeline import truncation_errors


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--knots", type=int, default=8)
    ap.add_argument("--samples", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    sys = SystemSpec.from_horizon([Term(S_Z, 1.0), Term(S_X)], 1.0, args.knots)
    bmax = 0.95 * (np.pi - sys.T) / sys.T
    for quad in ("simplex", "rectangle"):
        rng = np.random.default_rng(args.seed)
        good, table = 0, []
        for _ in range(args.samples):
            u = {v: float(rng.uniform(-bmax, bmax)) for v in sys.variables()}
            errs = truncation_errors(sys, u, 4, quad)
            table.append(errs)
            good += all(b <= a for a, b in zip(errs, errs[1:]))
        med = np.median(np.array(table), axis=0)
        print(f"{quad:9s} K={args.knots}: {good}/{args.samples} non-increasing; "
              "median errors " + " ".join(f"{e:.2e}" for e in med))


if __name__ == "__main__":
    main()
