"""Minimum WLR violation over the three cuts on a 30x30 (theta, mu) GENW3 grid."""

import argparse

from wigner_lr.search import OptimizerOptions, grid_axis, product_grid, scan_min_violation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--restarts", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="genw3_scan.csv")
    args = ap.parse_args()
    axis = grid_axis(args.points)
    table = scan_min_violation("GENW3", product_grid(axis, axis),
                               OptimizerOptions(restarts=args.restarts, rng_seed=args.seed))
    with open(args.output, "w") as fh:
        fh.write(table.to_csv())
    violated = sum(r.min_violation > 1e-7 for r in table.rows)
    print(f"wrote {len(table.rows)} rows to {args.output}; {violated} points violate every cut")


if __name__ == "__main__":
    main()
