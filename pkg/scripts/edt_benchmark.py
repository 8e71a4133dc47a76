"""Time the separable distance transform against grid size and point count."""
import argparse
import time

import numpy as np

from fidtloc import PointSet, distance_transform


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 512, 1024, 2048])
    ap.add_argument("--points", type=int, nargs="+", default=[10, 1000, 10000])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    distance_transform(PointSet(4, 4, [(0, 0)]))  # compile
    print("side,points,best_seconds")
    for side in args.sizes:
        for n in args.points:
            ps = PointSet(side, side, rng.uniform(0, side - 1, (n, 2)))
            best = min(_timed(ps) for _ in range(args.repeats))
            print(f"{side},{n},{best:.4f}")


def _timed(ps):
    t0 = time.perf_counter()
    distance_transform(ps)
    return time.perf_counter() - t0


if __name__ == "__main__":
    main()
