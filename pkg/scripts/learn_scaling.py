"""Wall time of the block-wise learner on planted pins, for doubling m.

    python3 scripts/learn_scaling.py --d 3 --s 2 --m 200 --doublings 3
"""

import argparse
import time

from subspace_rigidity.hypergraph import Dims
from subspace_rigidity.learn import learn_dictionary, plant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--m", type=int, default=200)
    ap.add_argument("--doublings", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    dims = Dims(args.d, args.s)
    prev = None
    print(f"{'m':>6} {'n':>6} {'seconds':>8} {'ratio':>6} {'residual':>9}")
    for i in range(args.doublings):
        m = args.m * 2**i
        fw = plant(m, dims, args.seed)
        best = float("inf")
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = learn_dictionary(fw.pins, dims, seed=args.seed, threads=args.threads)
            best = min(best, time.perf_counter() - t0)
        ratio = "" if prev is None else f"{best / prev:.2f}"
        print(f"{m:>6} {res.n:>6} {best:>8.2f} {ratio:>6} {res.residual:>9.1e}")
        prev = best


if __name__ == "__main__":
    main()
