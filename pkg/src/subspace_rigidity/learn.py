"""Linear-time dictionary construction for generic pins.

A seed graph H0 on k(d-s) vertices is solved once.  Every further group of
d-1 pins is attached as a copy of one small block: d-s new vertices joined to
a fixed set of base vertices in H0.  With the base fixed, each block is a
constant-size system, so the total work grows linearly in the number of pins.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, GenerationStuck, InputError, NoConvergence, TooFewPins
from .hypergraph import Dims, Edge, Hypergraph, new_hypergraph, to_dict
from .incidence import Framework, chart_from_homogeneous, dictionary_to_dict, pin_residuals, random_framework
from .rigidity import modular_generic_rank
from .seeding import child_rng, sub_seed
from .solver import SolveOptions, SolveResult, solve_fitted, verify_solution
from .sparsity import PebbleGame, RigidityKind, check_rigidity_combinatorial, random_tight_hypergraph


def choose_k(dims: Dims) -> int:
    k = 1
    while comb(k * dims.copies, dims.s) < k * (dims.d - 1):
        k += 1
    return k


def generically_rigid(h: Hypergraph, seed: int) -> bool:
    """Modular rank check; a full-rank trial certifies full generic rank."""
    target = h.n_vertices * (h.dims.d - 1)
    return modular_generic_rank(h, seed=seed, trials=2).rank == target


def build_seed_graph(dims: Dims, seed: int, max_tries: int = 64) -> Hypergraph:
    """A tight seed graph whose rigidity matrix also has full generic rank.

    For d-s >= 2 some tight graphs are generically dependent, so candidates
    are re-drawn until the rank check passes.
    """
    n0 = choose_k(dims) * dims.copies
    for attempt in range(max_tries):
        h0 = random_tight_hypergraph(n0, dims, sub_seed(seed, "h0", attempt))
        if generically_rigid(h0, sub_seed(seed, "h0-rank", attempt)):
            return h0
    raise GenerationStuck(f"no generically rigid seed graph in {max_tries} tries")


@dataclass(frozen=True)
class BlockTemplate:
    """d-s new vertex slots attached to base vertices of the seed graph.

    ``edges`` use seed-graph ids for base vertices and ids ``n0 + i`` for new
    slot ``i``, i.e. they are the first block instance.
    """

    n0: int
    n_new: int
    base: tuple[int, ...]
    edges: tuple[Edge, ...]

    def instantiate(self, first_new: int) -> list[Edge]:
        shift = first_new - self.n0
        return [tuple(sorted(v + shift if v >= self.n0 else v for v in e)) for e in self.edges]

    def local(self, dims: Dims, n_edges: int | None = None) -> Hypergraph:
        """The block as its own hypergraph: base vertices first, then the new slots."""
        order = list(self.base) + [self.n0 + i for i in range(self.n_new)]
        pos = {v: i for i, v in enumerate(order)}
        edges = self.edges if n_edges is None else self.edges[:n_edges]
        return new_hypergraph(len(order), dims, [[pos[v] for v in e] for e in edges])

    def to_dict(self) -> dict:
        return {"base": list(self.base), "new": self.n_new, "edges": [list(e) for e in self.edges]}


def build_block(dims: Dims, h0: Hypergraph, seed: int, max_tries: int = 64) -> BlockTemplate:
    """Randomized search for a block keeping h0 plus the block minimally rigid.

    Candidate edges must touch a new vertex.  They are inserted through the
    pebble game started from h0, and the finished block is re-checked with a
    fresh game on the union, plus a generic rank check.
    """
    n0, c, k = h0.n_vertices, dims.copies, dims.d - 1
    new = list(range(n0, n0 + c))
    existing = set(h0.edges)
    candidates = [
        e for e in combinations(range(n0 + c), dims.s) if e[-1] >= n0 and e not in existing
    ]
    for attempt in range(max_tries):
        rng = child_rng(seed, "block", attempt)
        game = PebbleGame(n0, k)
        for e in h0.edges:
            game.try_add_copies(e, c)
        game.add_vertices(c)
        chosen: list[Edge] = []
        for idx in rng.permutation(len(candidates)):
            if len(chosen) == k:
                break
            if game.try_add_copies(candidates[idx], c):
                chosen.append(candidates[idx])
        if len(chosen) != k or not set(new) <= {v for e in chosen for v in e}:
            continue
        union = new_hypergraph(n0 + c, dims, list(h0.edges) + chosen)
        if check_rigidity_combinatorial(union).kind is RigidityKind.MINIMALLY_RIGID and generically_rigid(
            union, sub_seed(seed, "block-rank", attempt)
        ):
            base = tuple(sorted({v for e in chosen for v in e if v < n0}))
            return BlockTemplate(n0, c, base, tuple(chosen))
    raise GenerationStuck(f"no valid block found in {max_tries} tries")


@dataclass(frozen=True)
class LearnPlan:
    k: int
    h0: Hypergraph
    block: BlockTemplate
    blocks: int  # t full copies
    leftover: int  # r pins in the trailing partial block

    @property
    def n_vertices(self) -> int:
        return self.h0.n_vertices + (self.blocks + (self.leftover > 0)) * self.block.n_new

    def block_vertices(self, i: int) -> list[int]:
        start = self.h0.n_vertices + i * self.block.n_new
        return list(self.block.base) + list(range(start, start + self.block.n_new))

    def block_pins(self, i: int) -> slice:
        start = self.h0.m + i * len(self.block.edges)
        stop = start + (self.leftover if i == self.blocks else len(self.block.edges))
        return slice(start, stop)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "h0_vertices": self.h0.n_vertices,
            "h0_edges": self.h0.m,
            "block": self.block.to_dict(),
            "t": self.blocks,
            "r": self.leftover,
        }


def construct_hypergraph(m: int, dims: Dims, seed: int) -> tuple[Hypergraph, LearnPlan]:
    k = choose_k(dims)
    e0 = k * (dims.d - 1)
    if m < e0:
        raise TooFewPins(f"need at least {e0} pins for the seed graph, got {m}")
    h0 = build_seed_graph(dims, seed)
    block = build_block(dims, h0, sub_seed(seed, "block"))
    t, r = divmod(m - e0, dims.d - 1)
    edges = list(h0.edges)
    for i in range(t):
        edges += block.instantiate(h0.n_vertices + i * block.n_new)
    if r:
        edges += block.instantiate(h0.n_vertices + t * block.n_new)[:r]
    plan = LearnPlan(k, h0, block, t, r)
    return new_hypergraph(plan.n_vertices, dims, edges), plan


def plant(m: int, dims: Dims, seed: int) -> Framework:
    """Pins drawn from a hidden Gaussian dictionary on the constructed hypergraph."""
    h, _ = construct_hypergraph(m, dims, seed)
    return random_framework(h, sub_seed(seed, "plant"))


@dataclass
class StageReport:
    stage: str
    field: str
    restarts_used: int
    residual: float
    rank: int
    free_coordinates: int
    ms: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class LearnResult:
    h: Hypergraph
    vectors: np.ndarray
    residual: float
    field: str
    plan: LearnPlan
    stages: list[StageReport] = field(default_factory=list)
    pins: np.ndarray | None = None
    chart_rotation: np.ndarray | None = None
    total_ms: float = 0.0

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def to_dict(self) -> dict:
        out = {
            "hypergraph": to_dict(self.h),
            "dictionary": dictionary_to_dict(self.vectors)["vectors"],
            "n": self.n,
            "m": self.h.m,
            "residual": self.residual,
            "field": self.field,
            "plan": self.plan.to_dict(),
            "stages": [s.to_dict() for s in self.stages],
            "total_ms": self.total_ms,
        }
        if self.chart_rotation is not None:
            out["chart_rotation"] = self.chart_rotation.tolist()
        return out


def _to_chart(pins_raw, dims: Dims, seed: int):
    pts = np.atleast_2d(np.asarray(pins_raw, dtype=float))
    if pts.shape[1] == dims.d - 1:
        return pts, None
    if pts.shape[1] == dims.d:
        chart = chart_from_homogeneous(pts, seed=sub_seed(seed, "chart"))
        return chart.points, chart.rotation
    raise DimensionMismatch(f"pins must have {dims.d - 1} (chart) or {dims.d} (homogeneous) coordinates")


def _solve_stage(name, h, pins, opts, fixed=None) -> tuple[SolveResult, StageReport]:
    """Solve one stage; in complex mode try the reals first."""
    t0 = time.perf_counter()
    fields = ["real", "complex"] if opts.field == "complex" else ["real"]
    if fixed and any(np.iscomplexobj(v) for v in fixed.values()):
        fields = ["complex"]
    err = None
    for fld in fields:
        try:
            res = solve_fitted(h, pins, replace(opts, field=fld), fixed)
            break
        except NoConvergence as exc:
            err = exc
    else:
        raise NoConvergence(
            f"stage {name}: {err}", best_x=err.best_x, best_residual=err.best_residual, stage=name
        )
    check = verify_solution(h, pins, res.vectors, tol=opts.tol)
    if not check.passed:
        raise NoConvergence(
            f"stage {name} failed verification ({check.max_residual:.3e})",
            best_x=res.vectors, best_residual=check.max_residual, stage=name,
        )
    ms = 1e3 * (time.perf_counter() - t0)
    return res, StageReport(
        name, res.field, res.restarts_used, res.residual, res.jacobian_rank_at_solution, res.free_coordinates, ms
    )


def learn_dictionary(
    pins_raw,
    dims: Dims,
    opts: SolveOptions | None = None,
    seed: int = 0,
    threads: int = 1,
    block_order: Sequence[int] | None = None,
) -> LearnResult:
    """Build the hypergraph for ``len(pins_raw)`` pins and solve for a dictionary.

    Pins are assigned to edges in input order.  Chart input has d-1
    coordinates; homogeneous input (d coordinates) is dehomogenized first.
    """
    opts = opts or SolveOptions()
    start = time.perf_counter()
    pins, rotation = _to_chart(pins_raw, dims, seed)
    h, plan = construct_hypergraph(len(pins), dims, seed)
    h0 = plan.h0
    res0, rep0 = _solve_stage("h0", h0, pins[: h0.m], replace(opts, seed=sub_seed(opts.seed, "h0")))
    stages = [rep0]
    V = np.zeros((h.n_vertices, dims.d - 1), dtype=res0.vectors.dtype)
    V[: h0.n_vertices] = res0.vectors

    full_local = plan.block.local(dims)
    nb = len(plan.block.base)

    def solve_block(i: int):
        local = full_local if i < plan.blocks else plan.block.local(dims, plan.leftover)
        fixed = {j: V[v] for j, v in enumerate(plan.block.base)}
        # with the base fixed, raw minors are nearly linear; degenerate roots are still rejected
        block_opts = replace(opts, seed=sub_seed(opts.seed, "block", i), volume_weight=False)
        label = f"block{i}" if i < plan.blocks else "partial"
        return _solve_stage(label, local, pins[plan.block_pins(i)], block_opts, fixed)

    order = list(range(plan.blocks)) if block_order is None else list(block_order)
    if sorted(order) != list(range(plan.blocks)):
        raise InputError("block_order must be a permutation of the full blocks")
    if plan.leftover:
        order.append(plan.blocks)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(solve_block, order))
    else:
        outcomes = [solve_block(i) for i in order]
    for i, (res, rep) in zip(order, outcomes):
        if np.iscomplexobj(res.vectors) and not np.iscomplexobj(V):
            V = V.astype(complex)
        V[plan.block_vertices(i)[nb:]] = res.vectors[nb:]
        stages.append(rep)
    residuals = pin_residuals(h, V, pins)
    worst = float(residuals.max()) if residuals.size else 0.0
    field_used = "complex" if np.iscomplexobj(V) else "real"
    if worst > opts.tol:
        raise NoConvergence(
            f"assembled dictionary has residual {worst:.3e} > {opts.tol:g}",
            best_x=V, best_residual=worst, stage="final",
        )
    return LearnResult(
        h, V, worst, field_used, plan, stages, pins, rotation, 1e3 * (time.perf_counter() - start)
    )
