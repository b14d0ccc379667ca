"""Minimum WLR violation over the seven cuts on a (theta, mu) GENW4 grid at fixed nu."""

import argparse
import math

from wigner_lr.search import OptimizerOptions, grid_axis, product_grid, scan_min_violation


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=30)
    ap.add_argument("--nu", type=float, default=math.pi / 4)
    ap.add_argument("--restarts", type=int, default=4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="genw4_scan.csv")
    args = ap.parse_args()
    axis = grid_axis(args.points)
    table = scan_min_violation("GENW4", product_grid(axis, axis),
                               OptimizerOptions(restarts=args.restarts, rng_seed=args.seed), nu=args.nu)
    with open(args.output, "w") as fh:
        fh.write(table.to_csv())
    print(f"wrote {len(table.rows)} rows to {args.output}")


if __name__ == "__main__":
    main()
