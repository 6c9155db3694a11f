"""Rigidity matrix of a pinned subspace-incidence framework and its generic rank.

Rows are indexed by (pin, column-subset C); the row is the gradient of
``det(E[:, C])`` with respect to the dictionary coordinates, where ``E`` has
rows ``v_i - x``.  The gradient entry at (support vertex i, coordinate C[q])
is the signed cofactor ``(-1)**(i+q) * det(E[:, C] without row i, col q)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations
from math import comb
from typing import Sequence

import numpy as np
import sympy
from scipy.optimize import linear_sum_assignment

from .errors import BadPrime, DegenerateNormalizer, MatchingFailed, NotMinimallyRigid
from .hypergraph import Dims, ExpandedMultiHypergraph, Hypergraph, expand
from .incidence import Framework, support_matrices
from .seeding import sub_seed
from .sparsity import (
    MapDecomposition,
    RigidityKind,
    RigidityVerdict,
    check_rigidity_combinatorial,
    map_decomposition,
)

Selector = tuple[int, ...]

DEFAULT_REL_THRESHOLD = 1e-8


def all_selectors(dims: Dims) -> list[Selector]:
    """Every s-subset of the d-1 chart coordinates, in lexicographic order."""
    return list(combinations(range(dims.d - 1), dims.s))


def _perm_sign(p: Sequence[int]) -> int:
    sign, seen = 1, [False] * len(p)
    for i in range(len(p)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = p[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


# --- float construction ---------------------------------------------------

def minor_values(E: np.ndarray, sels: Sequence[Selector]) -> np.ndarray:
    """det(E[k][:, C]) for every pin k and selector C; shape (P, T)."""
    out = np.empty(E.shape[:1] + (len(sels),), dtype=E.dtype)
    for t, sel in enumerate(sels):
        out[:, t] = np.linalg.det(E[:, :, list(sel)])
    return out


def cofactor_blocks(E: np.ndarray, sels: Sequence[Selector]) -> np.ndarray:
    """Gradient blocks, shape (P, T, s, d-1): d det(E[:, C]) / d v_{i, j}."""
    P, s, d1 = E.shape
    out = np.zeros((P, len(sels), s, d1), dtype=E.dtype)
    rows = np.arange(s)
    for t, sel in enumerate(sels):
        sub = E[:, :, list(sel)]
        for q, j in enumerate(sel):
            keep_c = [c for c in range(s) if c != q]
            for i in rows:
                keep_r = [r for r in rows if r != i]
                minor = sub[:, keep_r][:, :, keep_c]
                out[:, t, i, j] = (-1) ** (i + q) * np.linalg.det(minor)
    return out


@dataclass
class RigidityMatrix:
    entries: np.ndarray
    row_meta: list[tuple[int, Selector]]
    column_meta: list[tuple[int, int]]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def rows_of_pin(self, pin_id: int) -> list[int]:
        return [r for r, (k, _) in enumerate(self.row_meta) if k == pin_id]

    def row_index(self, pin_id: int, sel: Selector) -> int:
        return self.row_meta.index((pin_id, tuple(sel)))


def assemble(h: Hypergraph, blocks: np.ndarray, sels: Sequence[Selector]) -> np.ndarray:
    """Scatter (P, T, s, d-1) gradient blocks into an (P*T, n*(d-1)) matrix."""
    d1 = h.dims.d - 1
    P, T = blocks.shape[:2]
    M = np.zeros((P * T, h.n_vertices * d1), dtype=blocks.dtype)
    for k, edge in enumerate(h.edges):
        for i, v in enumerate(edge):
            M[k * T:(k + 1) * T, v * d1:(v + 1) * d1] = blocks[k, :, i, :]
    return M


def jacobian(fw: Framework, sels: Sequence[Selector] | None = None) -> RigidityMatrix:
    h = fw.h
    sels = all_selectors(h.dims) if sels is None else [tuple(c) for c in sels]
    E = support_matrices(h, fw.vectors, fw.pins)
    M = assemble(h, cofactor_blocks(E, sels), sels)
    row_meta = [(k, sel) for k in range(h.m) for sel in sels]
    column_meta = [(v, j) for v in range(h.n_vertices) for j in range(h.dims.d - 1)]
    return RigidityMatrix(M, row_meta, column_meta)


@dataclass(frozen=True)
class SimplifiedRow:
    """Row divided by the sum of its j*-column entries: entry(i, j) = a[i] * b[j]."""

    row: np.ndarray
    a: np.ndarray
    b: np.ndarray
    j_star: int
    normalizer: float


def simplified_row(fw: Framework, pin_id: int, selector: Selector) -> SimplifiedRow:
    sel = tuple(selector)
    E = support_matrices(fw.h, fw.vectors, fw.pins)[pin_id:pin_id + 1]
    block = cofactor_blocks(E, [sel])[0, 0]  # (s, d-1)
    sums = block.sum(axis=0)
    j_star = max(sel, key=lambda j: abs(sums[j]))
    scale = np.abs(block).max()
    if scale == 0 or abs(sums[j_star]) <= 1e-12 * scale:
        raise DegenerateNormalizer(f"pin {pin_id}: every candidate normalizer vanishes")
    norm = sums[j_star]
    d1 = fw.dims.d - 1
    row = np.zeros(fw.h.n_vertices * d1)
    for i, v in enumerate(fw.h.edges[pin_id]):
        row[v * d1:(v + 1) * d1] = block[i] / norm
    return SimplifiedRow(row, block[:, j_star] / norm, sums / norm, j_star, float(norm))


# --- rank -----------------------------------------------------------------

@dataclass
class RankReport:
    rank: int
    method: str  # "float" or "modular"
    threshold: float | None = None
    prime: int | None = None
    trials: int = 1
    trial_ranks: list[int] = field(default_factory=list)
    seed: int | None = None
    shape: tuple[int, int] | None = None

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "method": self.method,
            "threshold": self.threshold,
            "prime": self.prime,
            "trials": self.trials,
            "trial_ranks": self.trial_ranks,
            "seed": self.seed,
            "shape": list(self.shape) if self.shape else None,
        }


def numeric_rank(matrix, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> RankReport:
    A = np.asarray(matrix)
    if A.size == 0:
        return RankReport(0, "float", rel_threshold, shape=A.shape)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = 0 if sv[0] == 0 else int(np.sum(sv > rel_threshold * sv[0]))
    return RankReport(rank, "float", rel_threshold, trial_ranks=[rank], shape=A.shape)


def rank_mod_p(A: np.ndarray, p: int) -> int:
    """Exact rank over GF(p) by row reduction; requires p < 2**31 so products fit int64."""
    A = np.array(A, dtype=np.int64) % p
    rows, cols = A.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, p) % p
        below = r + 1 + np.flatnonzero(A[r + 1:, c])
        if below.size:
            A[below] = (A[below] - A[below, c][:, None] * A[r]) % p
        r += 1
    return r


def _det_mod(M: list[list[int]], p: int) -> int:
    n = len(M)
    if n == 0:
        return 1
    total = 0
    for perm in permutations(range(n)):
        term = _perm_sign(perm)
        for i, j in enumerate(perm):
            term *= M[i][j]
        total += term
    return total % p


def jacobian_mod_p(h: Hypergraph, vectors: np.ndarray, pins: np.ndarray, p: int) -> np.ndarray:
    """Full rigidity matrix over GF(p) for integer coordinates."""
    s, d1 = h.dims.s, h.dims.d - 1
    sels = all_selectors(h.dims)
    T = len(sels)
    M = np.zeros((h.m * T, h.n_vertices * d1), dtype=np.int64)
    for k, edge in enumerate(h.edges):
        E = [[(int(vectors[v][j]) - int(pins[k][j])) % p for j in range(d1)] for v in edge]
        for t, sel in enumerate(sels):
            for i, v in enumerate(edge):
                others = [E[r] for r in range(s) if r != i]
                for q, j in enumerate(sel):
                    minor = [[row[c] for c in sel if c != j] for row in others]
                    val = _det_mod(minor, p)
                    M[k * T + t, v * d1 + j] = val if (i + q) % 2 == 0 else (-val) % p
    return M


def _check_prime(prime: int) -> None:
    if not (2**20 < prime < 2**31):
        raise BadPrime(f"prime must lie in (2^20, 2^31), got {prime}")
    if not sympy.isprime(prime):
        raise BadPrime(f"{prime} is not prime")


def random_prime(seed: int) -> int:
    rng = np.random.default_rng(sub_seed(seed, "prime"))
    return int(sympy.prevprime(int(rng.integers(2**30, 2**31 - 1))))


def random_modular_framework(h: Hypergraph, p: int, rng: np.random.Generator):
    """Integer dictionary in [1, p-1] and pins as affine combinations mod p."""
    d1 = h.dims.d - 1
    vectors = rng.integers(1, p, size=(h.n_vertices, d1), dtype=np.int64)
    pins = np.zeros((h.m, d1), dtype=np.int64)
    for k, edge in enumerate(h.edges):
        while True:
            t = [int(x) for x in rng.integers(1, p, size=h.dims.s)]
            total = sum(t) % p
            if total:
                break
        inv = pow(total, -1, p)
        for ti, v in zip(t, edge):
            c = ti * inv % p
            pins[k] = (pins[k] + c * vectors[v] % p) % p
    return vectors, pins


def modular_generic_rank(h: Hypergraph, seed: int = 0, prime: int | None = None, trials: int = 3) -> RankReport:
    p = random_prime(seed) if prime is None else int(prime)
    _check_prime(p)
    ranks = []
    for trial in range(trials):
        rng = np.random.default_rng(sub_seed(seed, "trial", trial))
        vectors, pins = random_modular_framework(h, p, rng)
        ranks.append(rank_mod_p(jacobian_mod_p(h, vectors, pins, p), p))
    shape = (h.m * comb(h.dims.d - 1, h.dims.s), h.n_vertices * (h.dims.d - 1))
    return RankReport(max(ranks, default=0), "modular", None, p, trials, ranks, seed, shape)


# --- verdicts -------------------------------------------------------------

@dataclass
class NumericVerdict:
    rigid: bool
    independent: bool
    rank: int
    rigid_target: int  # n(d-1)
    independent_target: int  # m(d-s)
    report: RankReport

    @property
    def label(self) -> str:
        return ("Rigid" if self.rigid else "Flexible") + "+" + (
            "Independent" if self.independent else "Dependent"
        )

    def to_dict(self) -> dict:
        return {
            "rigid": self.rigid,
            "independent": self.independent,
            "label": self.label,
            "rank": self.rank,
            "rigid_target": self.rigid_target,
            "independent_target": self.independent_target,
            "rank_report": self.report.to_dict(),
        }


def rigidity_verdict_numeric(
    h: Hypergraph, seed: int = 0, trials: int = 3, prime: int | None = None
) -> NumericVerdict:
    report = modular_generic_rank(h, seed=seed, prime=prime, trials=trials)
    n_target = h.n_vertices * (h.dims.d - 1)
    m_target = h.m * h.dims.copies
    return NumericVerdict(
        report.rank == n_target, report.rank == m_target, report.rank, n_target, m_target, report
    )


def framework_verdict(fw: Framework, rel_threshold: float = DEFAULT_REL_THRESHOLD) -> NumericVerdict:
    """Float verdict at a specific real framework (externally supplied pins)."""
    report = numeric_rank(jacobian(fw).entries, rel_threshold)
    n_target = fw.h.n_vertices * (fw.dims.d - 1)
    m_target = fw.h.m * fw.dims.copies
    return NumericVerdict(
        report.rank == n_target, report.rank == m_target, report.rank, n_target, m_target, report
    )


_EXPECTED = {
    RigidityKind.MINIMALLY_RIGID: lambda nv: nv.rigid and nv.independent,
    RigidityKind.INDEPENDENT_FLEXIBLE: lambda nv: nv.independent and not nv.rigid,
    RigidityKind.OVERCONSTRAINED: lambda nv: not nv.independent,
}


@dataclass
class AgreementReport:
    agree: bool
    combinatorial: RigidityVerdict
    numeric: NumericVerdict
    repeated_supports: bool
    annotation: str | None = None

    def to_dict(self) -> dict:
        return {
            "agree": self.agree,
            "combinatorial": self.combinatorial.to_dict(),
            "numeric": self.numeric.to_dict(),
            "repeated_supports": self.repeated_supports,
            "annotation": self.annotation,
        }


def verify_main_theorem(h: Hypergraph, seed: int = 0, trials: int = 3, prime: int | None = None) -> AgreementReport:
    comb_v = check_rigidity_combinatorial(h)
    num_v = rigidity_verdict_numeric(h, seed=seed, trials=trials, prime=prime)
    agree = _EXPECTED[comb_v.kind](num_v)
    repeated = h.has_repeated_supports()
    note = None
    if repeated:
        note = (
            "pure-condition risk: several pins share one support set"
            if agree
            else "pure-condition violation: several pins share one support set"
        )
    elif not agree:
        note = "distinct supports, yet the counts and the generic rank disagree"
    return AgreementReport(agree, comb_v, num_v, repeated, note)


# --- finite differences ---------------------------------------------------

def finite_difference_check(fw: Framework, step: float = 1e-3, floor: float = 1e-9) -> float:
    """Max relative error between central differences and the analytic Jacobian.

    A minor is affine in any single coordinate (each vertex occupies one row),
    so central differences carry no truncation error and a fairly large step
    only reduces cancellation.
    """
    h = fw.h
    sels = all_selectors(h.dims)
    J = jacobian(fw, sels).entries
    d1 = h.dims.d - 1
    V = np.array(fw.vectors, dtype=float)
    worst = 0.0
    for v in range(h.n_vertices):
        for j in range(d1):
            plus, minus = V.copy(), V.copy()
            plus[v, j] += step
            minus[v, j] -= step
            fp = minor_values(support_matrices(h, plus, fw.pins), sels).ravel()
            fm = minor_values(support_matrices(h, minus, fw.pins), sels).ravel()
            fd = (fp - fm) / (2 * step)
            an = J[:, v * d1 + j]
            mag = np.maximum(np.abs(an), np.abs(fd))
            big = mag > floor
            if np.any(big):
                worst = max(worst, float(np.max(np.abs(fd[big] - an[big]) / mag[big])))
    return worst


# --- pure-condition certificate ------------------------------------------

@dataclass
class GenericityCertificate:
    row_selection: dict[int, Selector]  # expanded edge id -> selector
    rows: list[int]  # indices into the full Jacobian
    determinant: float
    normalized_determinant: float  # |det| / product of row norms
    decomposition: MapDecomposition
    threshold: float = 1e-10

    @property
    def certified(self) -> bool:
        return self.normalized_determinant > self.threshold

    def to_dict(self) -> dict:
        return {
            "certified": self.certified,
            "determinant": self.determinant,
            "normalized_determinant": self.normalized_determinant,
            "threshold": self.threshold,
            "row_selection": {str(k): list(v) for k, v in self.row_selection.items()},
            "colors": list(self.decomposition.color),
            "tails": list(self.decomposition.tail),
        }


def select_certificate_rows(eh: ExpandedMultiHypergraph, decomp: MapDecomposition) -> dict[int, Selector]:
    """Give each copy of a base edge a distinct selector containing the copy's color."""
    sels = all_selectors(eh.dims)
    c = eh.copies_per_edge
    choice: dict[int, Selector] = {}
    for b in range(eh.base.m):
        ids = [eh.expanded_id(b, i) for i in range(c)]
        cost = np.array([[0 if decomp.color[e] in sel else 1 for sel in sels] for e in ids])
        r, col = linear_sum_assignment(cost)
        if cost[r, col].sum():
            raise MatchingFailed(f"no admissible row selection for base edge {b}")
        for ri, ci in zip(r, col):
            choice[ids[ri]] = sels[ci]
    return choice


def pure_condition_certificate(fw: Framework, threshold: float = 1e-10) -> GenericityCertificate:
    verdict = check_rigidity_combinatorial(fw.h)
    if verdict.kind is not RigidityKind.MINIMALLY_RIGID:
        raise NotMinimallyRigid(f"hypergraph is {verdict.kind.value}")
    eh = expand(fw.h)
    decomp = map_decomposition(eh)
    choice = select_certificate_rows(eh, decomp)
    J = jacobian(fw)
    rows = [J.row_index(eh.base_of(e)[0], choice[e]) for e in range(eh.n_edges)]
    A = J.entries[rows]
    det = float(np.linalg.det(A))
    norms = np.linalg.norm(A, axis=1)
    denom = float(np.prod(norms))
    normalized = abs(det) / denom if denom > 0 else 0.0
    return GenericityCertificate(choice, rows, det, normalized, decomp, threshold)


def map_matrix(eh: ExpandedMultiHypergraph, decomp: MapDecomposition, color: int, weights=None) -> list[list[int]]:
    """Square matrix of one map: rows are its edges (ordered by tail), columns vertices.

    With ``weights=None`` the tail entry is 1 and the other support entries 0;
    otherwise ``weights[e]`` gives the s entries of edge ``e`` in support order.
    """
    ids = sorted(decomp.edges_of_color(color), key=lambda e: decomp.tail[e])
    N = [[0] * eh.n_vertices for _ in ids]
    for r, e in enumerate(ids):
        support = eh.edge(e)
        if weights is None:
            N[r][decomp.tail[e]] = 1
        else:
            for v, w in zip(support, weights[e]):
                N[r][v] = int(w)
    return N


def exact_determinant(N: list[list[int]]) -> int:
    return int(sympy.Matrix(N).det(method="bareiss"))
