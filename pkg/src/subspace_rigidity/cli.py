"""Command-line front end.  Every command prints one JSON report.

Exit status: 0 on success, 1 on a domain failure (no convergence, not tight,
...), 2 on bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .errors import InputError, NoConvergence, ParseError, RigidityError
from .hypergraph import Dims, expand, from_dict, tightness_counts, to_dict
from .incidence import (
    Framework,
    chart_from_homogeneous,
    dictionary_from_dict,
    dictionary_to_dict,
    load_json,
    pins_from_dict,
    pins_to_dict,
    points_from_dict,
    random_framework,
)
from .learn import learn_dictionary, plant
from .rigidity import framework_verdict, modular_generic_rank, verify_main_theorem
from .seeding import child_rng, sub_seed
from .solver import SolveOptions, solve_fitted
from .sparsity import check_rigidity_combinatorial, pebble_game, random_tight_hypergraph


class UsageError(InputError):
    pass


def _dims(args) -> Dims:
    if args.d is None or args.s is None:
        raise UsageError("--d and --s are required")
    return Dims(args.d, args.s)


def _graph(args):
    if not args.graph:
        raise UsageError("--graph FILE is required")
    return from_dict(load_json(args.graph))


def _opts(args) -> SolveOptions:
    return SolveOptions(field=args.field, restarts=args.restarts, tol=args.tol, seed=args.seed)


def _read_pins(path: str, width: int | None = None) -> np.ndarray:
    obj = load_json(path)
    if isinstance(obj, dict) and "points" in obj:
        return points_from_dict(obj)
    pins = pins_from_dict(obj)
    if width is not None and pins.shape[1] != width:
        raise ParseError(f"pins must have {width} coordinates")
    return pins


# --- commands -------------------------------------------------------------

def cmd_check(args) -> dict:
    h = _graph(args)
    verdict = check_rigidity_combinatorial(h)
    sparsity, _ = pebble_game(expand(h), h.dims.d - 1)
    counts = tightness_counts(h)
    return {
        **verdict.to_dict(),
        "sparsity": sparsity.to_dict(),
        "counts": {"lhs": counts.lhs, "rhs": counts.rhs},
        "repeated_supports": h.has_repeated_supports(),
    }


def cmd_rank(args) -> dict:
    h = _graph(args)
    if args.pins:
        if not args.dictionary:
            raise UsageError("--pins needs --dictionary for a framework rank")
        pins = pins_from_dict(load_json(args.pins), h.dims, h.m)
        dic = dictionary_from_dict(load_json(args.dictionary), h.dims)
        return framework_verdict(Framework(h, pins, dic)).to_dict()
    report = modular_generic_rank(h, seed=args.seed, prime=args.prime, trials=args.trials or 3)
    return {**report.to_dict(), "target": h.n_vertices * (h.dims.d - 1)}


def cmd_verify_theorem(args) -> dict:
    dims = _dims(args)
    if args.n is None:
        raise UsageError("--n is required")
    trials = args.trials or 10

    def one(i: int):
        h = random_tight_hypergraph(args.n, dims, sub_seed(args.seed, "graph", i))
        return h, verify_main_theorem(h, seed=sub_seed(args.seed, "rank", i), prime=args.prime)

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            results = list(pool.map(one, range(trials)))
    else:
        results = [one(i) for i in range(trials)]
    disagreements = [
        {"trial": i, "graph": to_dict(h), "report": rep.to_dict()}
        for i, (h, rep) in enumerate(results)
        if not rep.agree
    ]
    return {
        "d": dims.d,
        "s": dims.s,
        "n": args.n,
        "trials": trials,
        "agree": trials - len(disagreements),
        "disagreements": disagreements,
    }


def cmd_solve(args) -> dict:
    h = _graph(args)
    if not args.pins:
        raise UsageError("--pins FILE is required")
    pins = pins_from_dict(load_json(args.pins), h.dims, h.m)
    return solve_fitted(h, pins, _opts(args)).to_dict()


def cmd_learn(args) -> dict:
    dims = _dims(args)
    if not args.pins:
        raise UsageError("--pins FILE is required")
    pins = _read_pins(args.pins)
    return learn_dictionary(pins, dims, _opts(args), seed=args.seed, threads=args.threads).to_dict()


def cmd_gen(args) -> dict:
    dims = _dims(args)
    if args.kind == "tight":
        if args.n is None:
            raise UsageError("--n is required")
        return to_dict(random_tight_hypergraph(args.n, dims, args.seed))
    if args.kind == "framework":
        if not args.graph and args.n is None:
            raise UsageError("--graph FILE or --n is required")
        h = _graph(args) if args.graph else random_tight_hypergraph(args.n, dims, args.seed)
        fw = random_framework(h, args.seed)
        return {"graph": to_dict(h), **pins_to_dict(fw.pins), **dictionary_to_dict(fw.vectors)}
    if args.m is None:
        raise UsageError("--m is required")
    if args.kind == "planted":
        fw = plant(args.m, dims, args.seed)
        return {"graph": to_dict(fw.h), **pins_to_dict(fw.pins), **dictionary_to_dict(fw.vectors)}
    # sphere: uniform points on S^{d-1}, also given in a chart
    pts = child_rng(args.seed, "sphere").standard_normal((args.m, dims.d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    chart = chart_from_homogeneous(pts, seed=args.seed)
    return {"points": pts.tolist(), "chart": chart.points.tolist(), "rotation": chart.rotation.tolist()}


def cmd_bench(args) -> dict:
    dims = _dims(args)
    base = args.m or 200
    sizes = [base, 2 * base, 4 * base]
    rows = []
    for m in sizes:
        fw = plant(m, dims, args.seed)
        best = np.inf
        for _ in range(args.trials or 1):
            t0 = time.perf_counter()
            res = learn_dictionary(fw.pins, dims, _opts(args), seed=args.seed, threads=args.threads)
            best = min(best, time.perf_counter() - t0)
        rows.append({"m": m, "n": res.n, "residual": res.residual, "seconds": best})
    ratios = [rows[i + 1]["seconds"] / rows[i]["seconds"] for i in range(len(rows) - 1)]
    return {"runs": rows, "ratios": ratios}


COMMANDS = {
    "check": cmd_check,
    "rank": cmd_rank,
    "verify-theorem": cmd_verify_theorem,
    "solve": cmd_solve,
    "learn": cmd_learn,
    "gen": cmd_gen,
    "bench": cmd_bench,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int)
    common.add_argument("--s", type=int)
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-10)
    common.add_argument("--restarts", type=int, default=100)
    common.add_argument("--field", choices=["real", "complex"], default="real")
    common.add_argument("--prime", type=int)
    common.add_argument("--graph")
    common.add_argument("--pins")
    common.add_argument("--dictionary", help="dictionary JSON, for framework ranks")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--format", choices=["json"], default="json")

    parser = argparse.ArgumentParser(prog="subspace-rigidity", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "gen":
            p.add_argument("kind", choices=["tight", "framework", "planted", "sphere"])
    return parser


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    report = {"command": args.command, "argv": list(argv if argv is not None else sys.argv[1:]),
              "seed": args.seed, "version": __version__}
    code = 0
    try:
        report["payload"] = COMMANDS[args.command](args)
    except InputError as exc:
        code = 2
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
    except RigidityError as exc:
        code = 1
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NoConvergence):
            report["error"]["best_residual"] = exc.best_residual
            report["error"]["stage"] = exc.stage
    report["timing_ms"] = 1e3 * (time.perf_counter() - t0)
    _emit(report, args.out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
