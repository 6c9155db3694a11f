"""Success rate of the fitted solver on planted tight instances.

Only hypergraphs whose generic rank is full are used, so a failure means the
restarts missed a solution that exists.

    python3 scripts/plant_and_solve.py --d 4 --s 2 --n 6 --instances 10
"""

import argparse
import time

from subspace_rigidity.errors import NoConvergence
from subspace_rigidity.hypergraph import Dims
from subspace_rigidity.incidence import random_framework
from subspace_rigidity.rigidity import modular_generic_rank
from subspace_rigidity.solver import SolveOptions, solve_fitted
from subspace_rigidity.sparsity import random_tight_hypergraph


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--s", type=int, default=2)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--instances", type=int, default=10)
    ap.add_argument("--restarts", type=int, default=100)
    ap.add_argument("--field", choices=["real", "complex"], default="real")
    args = ap.parse_args()

    dims = Dims(args.d, args.s)
    solved = tried = 0
    seed = 0
    while tried < args.instances:
        h = random_tight_hypergraph(args.n, dims, seed)
        if modular_generic_rank(h, seed=seed).rank == args.n * (dims.d - 1):
            tried += 1
            fw = random_framework(h, seed)
            t0 = time.perf_counter()
            try:
                res = solve_fitted(h, fw.pins, SolveOptions(field=args.field, restarts=args.restarts, seed=seed))
                solved += res.full_rank
                note = f"restart {res.restarts_used}, rank {res.jacobian_rank_at_solution}/{res.free_coordinates}"
            except NoConvergence as exc:
                note = f"no convergence, best {exc.best_residual:.2e}"
            print(f"seed {seed:>3}: {note} ({time.perf_counter() - t0:.1f}s)", flush=True)
        seed += 1
    print(f"solved {solved}/{tried}")


if __name__ == "__main__":
    main()
