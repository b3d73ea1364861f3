"""Observed convergence order of the discretised second Magnus term.

The linear ramp b t against a constant drift a has the exact second term
-a b T^3 / 12 on S_y / i; the knot values are midpoint samples.
"""
import argparse

import numpy as np

from meqoc.algebra import S_X, S_Y, S_Z, hs_inner
from meqoc.magnus import SystemSpec, Term, discretize_term, midpoint_samples
from meqoc.poly import VarId


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--b", type=float, default=0.5)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--kmax", type=int, default=1024)
    args = ap.parse_args()

    exact = -args.a * args.b * args.T**3 / 12
    ay = S_Y / 1j
    prev = None
    print(f"{'K':>6} {'coefficient':>16} {'error':>10} {'order':>6}")
    K = 8
    while K <= args.kmax:
        sys = SystemSpec.from_horizon([Term(S_Z, args.a), Term(S_X)], args.T, K)
        u = {VarId(1, k): x for k, x in enumerate(midpoint_samples(lambda t: args.b * t, K, sys.dt), 1)}
        c = hs_inner(ay, discretize_term(sys, 2).evaluate(u)) / hs_inner(ay, ay)
        err = abs(c - exact)
        rate = "" if prev is None else f"{np.log2(prev / err):6.2f}"
        print(f"{K:6d} {c:16.10f} {err:10.2e} {rate:>6}")
        prev, K = err, 2 * K


if __name__ == "__main__":
    main()
