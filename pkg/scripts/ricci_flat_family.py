"""Compare the flat exp-sum potential with the non-flat family whose Hessian
determinant is exp(x_n).  Prints curvature sizes and the tightest residual of
each inequality over a grid.

    python3 scripts/ricci_flat_family.py --count 9
"""

import argparse

from hessianlab.potentials import example
from hessianlab.verify import CHECK_IDS, GridSpec, classify, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--count", type=int, default=9, help="grid nodes per axis")
    args = ap.parse_args()

    for name in ("expsum", "ricci_flat2", "ricci_flat3"):
        P = example(name)
        grid = GridSpec.from_domain(P.domain, args.count)
        c = classify(P, grid)
        rep = sweep(P, grid, CHECK_IDS)
        print(f"== {name}: {P.source}")
        print(f"   flags {sorted(c.flags)}  max|R| {c.max_R:.3e}  max|K| {c.max_K:.3e}")
        for cid, agg in rep.summary().items():
            if agg["evaluated"]:
                print(f"   {cid:12s} min {agg['min']:+.3e}  max {agg['max']:+.3e}  "
                      f"({agg['evaluated']}/{grid.size} evaluated)")


if __name__ == "__main__":
    main()
