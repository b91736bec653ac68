"""Time a full verification sweep for the n = 3 Ricci-flat example.

    python3 scripts/perf_sweep.py --shape 20 20 25 --workers 1
"""

import argparse
import time

from hessianlab.potentials import example
from hessianlab.verify import CHECK_IDS, GridSpec, sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--shape", type=int, nargs=3, default=(20, 20, 25))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--order", type=int, default=5)
    args = ap.parse_args()

    P = example("ricci_flat3")
    grid = GridSpec.from_domain(P.domain, tuple(args.shape))
    t0 = time.perf_counter()
    rep = sweep(P, grid, CHECK_IDS, order=args.order, workers=args.workers)
    dt = time.perf_counter() - t0
    print(f"{grid.size} nodes in {dt:.2f} s ({1e3 * dt / grid.size:.3f} ms/node, workers={args.workers})")
    print(f"errors={len(rep.errors)} all_passed={rep.all_passed}")


if __name__ == "__main__":
    main()
