"""(k,0) pebble games on expanded multi-hypergraphs.

The game keeps ``pebbles[v] + outdeg(v) == k`` for every vertex.  Inserting an
edge needs one pebble somewhere on it; pebbles are pulled in by reversing
tail-orientation paths.  When no pebble is reachable, the reachable vertex set
carries k|R| tailed edges plus the new one, which is the violation witness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .errors import GenerationStuck, Infeasible, NotTight, TooLarge
from .hypergraph import Dims, ExpandedMultiHypergraph, Hypergraph, expand, new_hypergraph
from .seeding import child_rng


class SparsityKind(str, enum.Enum):
    TIGHT = "Tight"
    SPARSE_NOT_TIGHT = "SparseNotTight"
    NOT_SPARSE = "NotSparse"


class RigidityKind(str, enum.Enum):
    MINIMALLY_RIGID = "MinimallyRigid"
    INDEPENDENT_FLEXIBLE = "IndependentFlexible"
    OVERCONSTRAINED = "Overconstrained"


@dataclass(frozen=True)
class SparsityVerdict:
    kind: SparsityKind
    witness: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind.value}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


@dataclass(frozen=True)
class RigidityVerdict:
    kind: RigidityKind
    witness: tuple[int, ...] | None = None

    def to_dict(self) -> dict:
        out = {"verdict": self.kind.value}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


@dataclass(frozen=True)
class PebbleState:
    pebbles: tuple[int, ...]
    tails: tuple[int, ...]  # -1 for copies never placed
    k: int
    l: int = 0


@dataclass(frozen=True)
class MapDecomposition:
    color: tuple[int, ...]
    tail: tuple[int, ...]

    def edges_of_color(self, c: int) -> list[int]:
        return [i for i, ci in enumerate(self.color) if ci == c]


class PebbleGame:
    """Mutable (k,0) pebble game; edges are inserted one copy at a time."""

    def __init__(self, n_vertices: int, k: int):
        if k < 1:
            raise ValueError("k must be >= 1")
        self.k = k
        self.pebbles = [k] * n_vertices
        self.out: list[set[int]] = [set() for _ in range(n_vertices)]
        self.edges: list[tuple[int, ...]] = []
        self.tails: list[int] = []

    @property
    def n_vertices(self) -> int:
        return len(self.pebbles)

    def add_vertices(self, count: int) -> list[int]:
        start = self.n_vertices
        self.pebbles.extend([self.k] * count)
        self.out.extend(set() for _ in range(count))
        return list(range(start, start + count))

    def free_pebbles(self) -> int:
        return sum(self.pebbles)

    def _gather(self, edge: Sequence[int]) -> tuple[int | None, set[int]]:
        """Bring one pebble onto ``edge``; return (vertex holding it, visited set)."""
        for v in edge:
            if self.pebbles[v] > 0:
                return v, set(edge)
        visited = set(edge)
        parent: dict[int, tuple[int, int]] = {}
        stack = list(edge)
        while stack:
            u = stack.pop()
            for f in self.out[u]:
                for w in self.edges[f]:
                    if w in visited:
                        continue
                    visited.add(w)
                    parent[w] = (u, f)
                    if self.pebbles[w] > 0:
                        cur = w
                        while cur in parent:
                            prev, g = parent[cur]
                            self.pebbles[cur] -= 1
                            self.pebbles[prev] += 1
                            self.out[prev].discard(g)
                            self.out[cur].add(g)
                            self.tails[g] = cur
                            cur = prev
                        return cur, visited
                    stack.append(w)
        return None, visited

    def try_add(self, edge: Sequence[int]) -> tuple[bool, set[int]]:
        v, visited = self._gather(edge)
        if v is None:
            return False, visited
        eid = len(self.edges)
        self.edges.append(tuple(edge))
        self.tails.append(v)
        self.pebbles[v] -= 1
        self.out[v].add(eid)
        return True, visited

    def remove_last(self) -> None:
        eid = len(self.edges) - 1
        v = self.tails.pop()
        self.edges.pop()
        self.out[v].discard(eid)
        self.pebbles[v] += 1

    def try_add_copies(self, edge: Sequence[int], copies: int) -> bool:
        """Insert ``copies`` parallel copies atomically; roll back on failure."""
        for i in range(copies):
            ok, _ = self.try_add(edge)
            if not ok:
                for _ in range(i):
                    self.remove_last()
                return False
        return True


def pebble_game(eh: ExpandedMultiHypergraph, k: int) -> tuple[SparsityVerdict, PebbleState]:
    game = PebbleGame(eh.n_vertices, k)
    edges = eh.edges
    for edge in edges:
        ok, visited = game.try_add(edge)
        if not ok:
            tails = tuple(game.tails) + (-1,) * (len(edges) - len(game.tails))
            state = PebbleState(tuple(game.pebbles), tails, k)
            return SparsityVerdict(SparsityKind.NOT_SPARSE, tuple(sorted(visited))), state
    state = PebbleState(tuple(game.pebbles), tuple(game.tails), k)
    kind = SparsityKind.TIGHT if game.free_pebbles() == 0 else SparsityKind.SPARSE_NOT_TIGHT
    return SparsityVerdict(kind), state


def check_rigidity_combinatorial(h: Hypergraph) -> RigidityVerdict:
    verdict, _ = pebble_game(expand(h), h.dims.d - 1)
    if verdict.kind is SparsityKind.TIGHT:
        return RigidityVerdict(RigidityKind.MINIMALLY_RIGID)
    if verdict.kind is SparsityKind.SPARSE_NOT_TIGHT:
        return RigidityVerdict(RigidityKind.INDEPENDENT_FLEXIBLE)
    return RigidityVerdict(RigidityKind.OVERCONSTRAINED, verdict.witness)


def witness_violates(h: Hypergraph, witness: Sequence[int], k: int | None = None) -> bool:
    k = h.dims.d - 1 if k is None else k
    return h.dims.copies * len(h.induced_edges(witness)) > k * len(set(witness))


def brute_force_sparsity(h: Hypergraph, k: int | None = None, max_vertices: int = 20) -> SparsityVerdict:
    """Exhaustive (k,0)-sparsity check over all vertex subsets of the expanded graph."""
    n = h.n_vertices
    if n > max_vertices:
        raise TooLarge(f"{n} vertices exceeds the exhaustive limit {max_vertices}")
    k = h.dims.d - 1 if k is None else k
    masks = np.arange(1 << n, dtype=np.int64)
    counts = np.zeros(1 << n, dtype=np.int64)
    for e in h.edges:
        em = 0
        for v in e:
            em |= 1 << v
        counts += (masks & em) == em
    sizes = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        sizes += (masks >> v) & 1
    bad = np.flatnonzero(h.dims.copies * counts > k * sizes)
    if bad.size:
        best = int(bad[np.argmin(sizes[bad])])
        return SparsityVerdict(SparsityKind.NOT_SPARSE, tuple(v for v in range(n) if best >> v & 1))
    if h.dims.copies * h.m == k * n:
        return SparsityVerdict(SparsityKind.TIGHT)
    return SparsityVerdict(SparsityKind.SPARSE_NOT_TIGHT)


def map_decomposition(eh: ExpandedMultiHypergraph) -> MapDecomposition:
    k = eh.dims.d - 1
    verdict, state = pebble_game(eh, k)
    if verdict.kind is not SparsityKind.TIGHT:
        raise NotTight(f"expanded graph is {verdict.kind.value}, not ({k},0)-tight")
    color = [0] * eh.n_edges
    seen = [0] * eh.n_vertices
    for eid, v in enumerate(state.tails):
        color[eid] = seen[v]
        seen[v] += 1
    return MapDecomposition(tuple(color), state.tails)


def random_tight_hypergraph(
    n_vertices: int, dims: Dims, seed: int, max_reseeds: int = 64
) -> Hypergraph:
    """Random hypergraph with distinct supports whose expansion is (d-1,0)-tight.

    Grows the graph with add-edge moves of ``d - s`` copies each, trying
    candidate supports in random order.
    """
    k, c = dims.d - 1, dims.copies
    if (k * n_vertices) % c:
        raise Infeasible(f"(d-1)n = {k * n_vertices} is not divisible by d-s = {c}")
    m = k * n_vertices // c
    if comb(n_vertices, dims.s) < m:
        raise Infeasible(f"need {m} distinct supports but only C({n_vertices},{dims.s}) exist")
    candidates = list(combinations(range(n_vertices), dims.s))
    for attempt in range(max_reseeds):
        rng = child_rng(seed, "tight", attempt)
        game = PebbleGame(n_vertices, k)
        chosen = []
        for idx in rng.permutation(len(candidates)):
            if len(chosen) == m:
                break
            e = candidates[idx]
            if game.try_add_copies(e, c):
                chosen.append(e)
        if len(chosen) == m:
            return new_hypergraph(n_vertices, dims, chosen)
    raise GenerationStuck(f"no tight hypergraph found after {max_reseeds} reseeds")
