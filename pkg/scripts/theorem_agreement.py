"""Compare the combinatorial count with the generic rank on random tight hypergraphs.

    python3 scripts/theorem_agreement.py --graphs 12 --n-max 12
"""

import argparse
import json
from math import comb

from subspace_rigidity.hypergraph import Dims, to_dict
from subspace_rigidity.rigidity import verify_main_theorem
from subspace_rigidity.seeding import sub_seed
from subspace_rigidity.sparsity import random_tight_hypergraph

PAIRS = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (5, 4)]


def sizes(dims, n_max):
    for n in range(dims.s + 1, n_max + 1):
        m, rem = divmod((dims.d - 1) * n, dims.copies)
        if rem == 0 and m <= comb(n, dims.s):
            yield n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--graphs", type=int, default=12, help="graphs per (d, s, n)")
    ap.add_argument("--n-max", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dump", help="write disagreeing graphs to this JSON file")
    args = ap.parse_args()

    bad = []
    print(f"{'d':>2} {'s':>2} {'n':>3} {'agree':>7}")
    for d, s in PAIRS:
        dims = Dims(d, s)
        for n in sizes(dims, args.n_max):
            ok = 0
            for i in range(args.graphs):
                h = random_tight_hypergraph(n, dims, sub_seed(args.seed, d, s, n, i))
                rep = verify_main_theorem(h, seed=sub_seed(args.seed, "rank", d, s, n, i))
                ok += rep.agree
                if not rep.agree:
                    bad.append({"graph": to_dict(h), "rank": rep.numeric.rank, "target": rep.numeric.rigid_target})
            print(f"{d:>2} {s:>2} {n:>3} {ok:>3}/{args.graphs}")
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            json.dump(bad, fh)


if __name__ == "__main__":
    main()
