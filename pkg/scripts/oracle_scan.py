"""Linear-driving series against fine propagation over a range of drive strengths.

The tabulated series is first order in b, so the error should fall like b^2.
"""
import argparse

import numpy as np

from meqoc.algebra import S_X, S_Z, exp_anti_hermitian
from meqoc.magnus import SystemSpec, Term, linear_drive_oracle
from meqoc.pipeline import propagate_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--a", type=float, default=0.5)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--steps", type=int, default=100_000)
    args = ap.parse_args()

    print(f"{'b':>8} {'error':>10} {'err/b^2':>10}")
    for b in (0.8, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01):
        sys = SystemSpec.from_horizon([Term(S_Z, args.a), Term(S_X)], args.T, 1)
        ref = propagate_profile(sys, {1: lambda t, b=b: b * t}, args.steps)
        err = np.linalg.norm(exp_anti_hermitian(linear_drive_oracle(args.a, b, args.T)) - ref)
        print(f"{b:8.3f} {err:10.2e} {err / b**2:10.2e}")


if __name__ == "__main__":
    main()
