"""Labeled s-uniform multi-hypergraphs over dictionary vertices.

Edge order is pin order: edge ``i`` is the support of pin ``i``.  Repeated
supports are legal here and are flagged by the rigidity layer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import EdgeSizeMismatch, InputError, ParseError, VertexOutOfRange

Edge = tuple[int, ...]


@dataclass(frozen=True)
class Dims:
    """Ambient dimension ``d`` and support size ``s``; points have d-1 chart coordinates."""

    d: int
    s: int

    def __post_init__(self):
        if not (isinstance(self.d, int) and isinstance(self.s, int)):
            raise InputError(f"dims must be integers, got d={self.d!r}, s={self.s!r}")
        if self.d < 3 or not (2 <= self.s <= self.d - 1):
            raise InputError(f"need d >= 3 and 2 <= s <= d-1, got d={self.d}, s={self.s}")

    @property
    def chart_dim(self) -> int:
        return self.d - 1

    @property
    def copies(self) -> int:
        """Independent incidence equations contributed by one pin."""
        return self.d - self.s


@dataclass(frozen=True)
class Hypergraph:
    n_vertices: int
    edges: tuple[Edge, ...]
    dims: Dims

    @property
    def m(self) -> int:
        return len(self.edges)

    def has_repeated_supports(self) -> bool:
        return len(set(self.edges)) != len(self.edges)

    def induced_edges(self, vertices: Iterable[int]) -> list[int]:
        """Indices of edges whose support lies inside ``vertices``."""
        vs = set(vertices)
        return [i for i, e in enumerate(self.edges) if vs.issuperset(e)]


@dataclass(frozen=True)
class ExpandedMultiHypergraph:
    """Each base edge replaced by ``d - s`` copies; copy ``c`` of edge ``i`` has id ``i*(d-s) + c``."""

    base: Hypergraph
    dims: Dims
    copies_per_edge: int

    @property
    def n_vertices(self) -> int:
        return self.base.n_vertices

    @property
    def n_edges(self) -> int:
        return self.copies_per_edge * self.base.m

    def expanded_id(self, base_edge: int, copy: int) -> int:
        if not 0 <= copy < self.copies_per_edge:
            raise IndexError(copy)
        return base_edge * self.copies_per_edge + copy

    def base_of(self, expanded_id: int) -> tuple[int, int]:
        return divmod(expanded_id, self.copies_per_edge)

    def edge(self, expanded_id: int) -> Edge:
        return self.base.edges[expanded_id // self.copies_per_edge]

    @property
    def edges(self) -> list[Edge]:
        return [e for e in self.base.edges for _ in range(self.copies_per_edge)]


@dataclass(frozen=True)
class TightnessCounts:
    lhs: int  # (d-s)|E|
    rhs: int  # (d-1)|V|

    @property
    def balanced(self) -> bool:
        return self.lhs == self.rhs


def new_hypergraph(n_vertices: int, dims: Dims, edges: Iterable[Sequence[int]]) -> Hypergraph:
    if n_vertices < 0:
        raise InputError(f"negative vertex count {n_vertices}")
    canon = []
    for raw in edges:
        e = tuple(int(v) for v in raw)
        if len(e) != dims.s or len(set(e)) != len(e):
            raise EdgeSizeMismatch(f"edge {list(raw)} must have exactly {dims.s} distinct vertices")
        for v in e:
            if not 0 <= v < n_vertices:
                raise VertexOutOfRange(f"vertex {v} not in [0, {n_vertices})")
        canon.append(tuple(sorted(e)))
    return Hypergraph(n_vertices, tuple(canon), dims)


def expand(h: Hypergraph) -> ExpandedMultiHypergraph:
    return ExpandedMultiHypergraph(h, h.dims, h.dims.copies)


def project(eh: ExpandedMultiHypergraph) -> tuple[Edge, ...]:
    """Collapse copies back to the base edge list."""
    edges = eh.edges
    return tuple(edges[i] for i in range(0, len(edges), eh.copies_per_edge))


def tightness_counts(h: Hypergraph, vertices: Iterable[int] | None = None) -> TightnessCounts:
    """Counts for the whole graph, or for the subgraph induced by ``vertices``."""
    if vertices is None:
        n, m = h.n_vertices, h.m
    else:
        vs = set(vertices)
        n, m = len(vs), len(h.induced_edges(vs))
    return TightnessCounts(h.dims.copies * m, (h.dims.d - 1) * n)


def disjoint_union(a: Hypergraph, b: Hypergraph) -> Hypergraph:
    if a.dims != b.dims:
        raise InputError("dims differ")
    shift = a.n_vertices
    edges = a.edges + tuple(tuple(v + shift for v in e) for e in b.edges)
    return Hypergraph(a.n_vertices + b.n_vertices, edges, a.dims)


def complete(n_vertices: int, dims: Dims) -> Hypergraph:
    """All s-subsets of ``range(n_vertices)`` in lexicographic order (K4, K5, ...)."""
    from itertools import combinations

    return new_hypergraph(n_vertices, dims, combinations(range(n_vertices), dims.s))


# --- JSON codec -----------------------------------------------------------

_FIELDS = {"d", "s", "n", "edges"}


def to_dict(h: Hypergraph) -> dict:
    return {"d": h.dims.d, "s": h.dims.s, "n": h.n_vertices, "edges": [list(e) for e in h.edges]}


def from_dict(obj) -> Hypergraph:
    if not isinstance(obj, dict):
        raise ParseError("hypergraph JSON must be an object")
    unknown = set(obj) - _FIELDS
    if unknown:
        raise ParseError(f"unknown field(s): {sorted(unknown)}")
    missing = _FIELDS - set(obj)
    if missing:
        raise ParseError(f"missing field(s): {sorted(missing)}")
    edges = obj["edges"]
    if not isinstance(edges, list) or not all(isinstance(e, list) for e in edges):
        raise ParseError("edges must be a list of integer arrays")
    for key in ("d", "s", "n"):
        if not isinstance(obj[key], int) or isinstance(obj[key], bool):
            raise ParseError(f"{key} must be an integer")
    for e in edges:
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in e):
            raise ParseError(f"edge {e} must contain integers")
    try:
        return new_hypergraph(obj["n"], Dims(obj["d"], obj["s"]), edges)
    except InputError as exc:
        raise ParseError(str(exc)) from exc


def codec_write(h: Hypergraph) -> str:
    return json.dumps(to_dict(h))


def codec_read(text: str) -> Hypergraph:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from exc
    return from_dict(obj)


def g_dagger() -> Hypergraph:
    """Tight but generically flexible example for d=3, s=2.

    Edges AB, AC, BC and AD each carry two pins.  The counts balance
    (8 = 2*4), but D can slide along the line through A and its pins.
    """
    return new_hypergraph(4, Dims(3, 2), [(0, 1), (0, 1), (0, 2), (0, 2), (1, 2), (1, 2), (0, 3), (0, 3)])
