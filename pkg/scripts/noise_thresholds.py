"""White-noise visibility thresholds for GHZ3 and W3 against the THM1 family."""

import argparse

from wigner_lr.inequalities import theorem1_set
from wigner_lr.qcore import named_state
from wigner_lr.search import OptimizerOptions, optimize_violation, threshold_analysis


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--restarts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    opts = OptimizerOptions(restarts=args.restarts, rng_seed=args.seed)

    for name in ("GHZ3", "W3"):
        psi = named_state(name)
        rep = threshold_analysis(psi, "THM1", opts)
        # I(p) is affine in p, so the optimum gives the threshold directly
        closed = {}
        for ineq in theorem1_set():
            top = optimize_violation(psi, ineq, opts).best_value
            mixed = sum(t.coefficient for t in ineq.terms) / 8
            closed[ineq.name] = -mixed / (top - mixed)
        print(f"{name}: p* = {rep.p_star:.5f} (monotone={rep.monotone})")
        for k, v in rep.per_inequality.items():
            print(f"   {k:14s} bisection {v:.5f}   closed form {closed[k]:.5f}")


if __name__ == "__main__":
    main()
