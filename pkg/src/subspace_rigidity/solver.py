"""Fitted dictionary learning: given the hypergraph and the pins, find the dictionary.

Each pin contributes its s x s minor equations (all of them by default, or
the d-s selected ones).  By default the solver weights a pin's equations by
``1 + 1/vol``, where ``vol`` is the (s-1)-volume of its support simplex.  A
raw minor is roughly vol times the pin's distance to the support flat, so it
vanishes spuriously when a support collapses onto a point; the weighted
residual tends to the distance there instead, and still grows when vertices
run off to infinity.  Raw minors are better when most vertices are fixed:
with a single free vertex they are linear in it.
Complex mode works on the real and imaginary parts as separate unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionMismatch, InputError, NoConvergence
from .hypergraph import Dims, Hypergraph
from .incidence import pin_residuals, support_matrices
from .rigidity import Selector, all_selectors, assemble, cofactor_blocks, minor_values, numeric_rank
from .seeding import child_rng

FIELDS = ("real", "complex")
EQUATIONS = ("all", "selected")


@dataclass(frozen=True)
class SolveOptions:
    field: str = "real"
    restarts: int = 100
    max_iters: int = 200
    tol: float = 1e-10
    damping: float = 1e-3
    seed: int = 0
    equations: str = "all"
    volume_weight: bool = True

    def __post_init__(self):
        if self.field not in FIELDS:
            raise InputError(f"field must be one of {FIELDS}, got {self.field!r}")
        if self.equations not in EQUATIONS:
            raise InputError(f"equations must be one of {EQUATIONS}, got {self.equations!r}")
        if not self.tol > 0:
            raise InputError("tol must be positive")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")


def select_equations(dims: Dims) -> list[Selector]:
    """d-s column subsets sharing the first s-1 columns.

    Generically these rows span the pin's constraint space, but they all
    vanish together whenever the shared columns of the incidence matrix
    do, so the solver defaults to every minor instead.
    """
    head = tuple(range(dims.s - 1))
    return [head + (j,) for j in range(dims.s - 1, dims.d - 1)]


@dataclass
class GNResult:
    x: np.ndarray
    residual: float
    iters: int


def gauss_newton(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    jacobian_fn: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = 1e-10,
    max_iters: int = 200,
    damping: float = 1e-3,
    stall_window: int = 25,
) -> GNResult:
    """Levenberg-damped Gauss-Newton on ||r(x)||_2.

    Damping is divided by 10 after an accepted step and multiplied by 10 after
    a rejected one.  Raises ``NoConvergence`` carrying the best iterate.
    """
    x = np.array(x0, dtype=float).ravel()
    r = np.atleast_1d(residual_fn(x))
    cost = float(np.linalg.norm(r))
    lam = damping
    history = [cost]
    for it in range(max_iters):
        if cost <= tol:
            return GNResult(x, cost, it)
        J = np.atleast_2d(jacobian_fn(x))
        A = np.vstack([J, np.sqrt(lam) * np.eye(x.size)])
        b = np.concatenate([-r, np.zeros(x.size)])
        step = np.linalg.lstsq(A, b, rcond=None)[0]
        x_new = x + step
        r_new = np.atleast_1d(residual_fn(x_new))
        c_new = float(np.linalg.norm(r_new))
        if np.isfinite(c_new) and c_new < cost:
            x, r, cost = x_new, r_new, c_new
            lam = max(lam / 10, 1e-15)
        else:
            lam *= 10
            if lam > 1e16:
                break
        history.append(cost)
        if len(history) > stall_window and cost > 0.999 * history[-stall_window - 1]:
            break
    if cost <= tol:
        return GNResult(x, cost, max_iters)
    raise NoConvergence(f"Gauss-Newton stopped at residual {cost:.3e}", best_x=x, best_residual=cost)


# --- the incidence system -------------------------------------------------

class IncidenceSystem:
    """Residuals and Jacobian of the volume-weighted minor equations over free vertices."""

    def __init__(
        self,
        h: Hypergraph,
        pins: np.ndarray,
        fixed: Mapping[int, np.ndarray] | None = None,
        complex_mode: bool = False,
        equations: str = "all",
        volume_weight: bool = True,
    ):
        self.h = h
        self.dims = h.dims
        self.d1 = h.dims.d - 1
        self.pins = np.asarray(pins, dtype=float)
        if self.pins.shape != (h.m, self.d1):
            raise DimensionMismatch(f"pins shape {self.pins.shape} != ({h.m}, {self.d1})")
        fixed = dict(fixed or {})
        self.complex_mode = complex_mode or any(np.iscomplexobj(np.asarray(v)) for v in fixed.values())
        dtype = complex if self.complex_mode else float
        self.base = np.zeros((h.n_vertices, self.d1), dtype=dtype)
        for v, coords in fixed.items():
            self.base[v] = coords
        self.free = [v for v in range(h.n_vertices) if v not in fixed]
        self.cols = np.array([v * self.d1 + j for v in self.free for j in range(self.d1)], dtype=np.intp)
        self.sels = all_selectors(h.dims) if equations == "all" else select_equations(h.dims)
        self.nvar = len(self.cols) * (2 if self.complex_mode else 1)
        self.volume_weight = volume_weight

    def vectors(self, z: np.ndarray) -> np.ndarray:
        V = self.base.copy()
        k = len(self.cols)
        vals = z[:k] + 1j * z[k:] if self.complex_mode else z
        V.reshape(-1)[self.cols] = vals
        return V

    def pack(self, V: np.ndarray) -> np.ndarray:
        flat = np.asarray(V).reshape(-1)[self.cols]
        if self.complex_mode:
            return np.concatenate([flat.real, flat.imag])
        return np.asarray(flat, dtype=float)

    def support_volumes(self, V: np.ndarray):
        """(s-1)-volume of each support simplex and its gradient w.r.t. the difference rows."""
        idx = np.asarray(self.h.edges, dtype=np.intp).reshape(self.h.m, self.dims.s)
        S = V[idx]
        A = S[:, 1:] - S[:, :1]
        G = A @ np.conj(np.swapaxes(A, 1, 2))
        vol = np.sqrt(np.maximum(np.linalg.det(G).real, 0.0))
        return vol, A, G

    def _parts(self, z):
        V = self.vectors(z)
        E = support_matrices(self.h, V, self.pins)
        f = minor_values(E, self.sels)
        vol, A, G = self.support_volumes(V)
        return V, E, f, vol, A, G

    def residual(self, z: np.ndarray) -> np.ndarray:
        _, _, f, vol, _, _ = self._parts(z)
        if not self.volume_weight:
            r = f
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                r = f * (1.0 + 1.0 / vol[:, None])
        if self.complex_mode:
            r = np.concatenate([r.real.ravel(), r.imag.ravel()])
        return np.nan_to_num(r.ravel(), nan=1e6, posinf=1e6, neginf=-1e6)

    def raw_jacobian(self, V: np.ndarray) -> np.ndarray:
        """Rigidity rows of the system's equations, restricted to free columns."""
        E = support_matrices(self.h, V, self.pins)
        return assemble(self.h, cofactor_blocks(E, self.sels), self.sels)[:, self.cols]

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        if not self.volume_weight:
            return self._plain_jacobian(self.vectors(z))
        V, E, f, vol, A, G = self._parts(z)
        vol = np.where(vol > 0, vol, 1e-300)
        df = cofactor_blocks(E, self.sels)  # (P, T, s, d1), holomorphic
        try:
            B = np.linalg.solve(G, A)  # d log vol / d conj(A)
        except np.linalg.LinAlgError:
            B = np.linalg.pinv(G) @ A
        dvol_re = np.zeros(E.shape, dtype=float)
        dvol_im = np.zeros(E.shape, dtype=float)
        dvol_re[:, 1:] = vol[:, None, None] * B.real
        dvol_im[:, 1:] = vol[:, None, None] * B.imag
        dvol_re[:, 0] = -dvol_re[:, 1:].sum(axis=1)
        dvol_im[:, 0] = -dvol_im[:, 1:].sum(axis=1)
        weight = (1.0 + 1.0 / vol)[:, None, None, None]
        ratio = (f / vol[:, None] ** 2)[:, :, None, None]
        d_re = df * weight - ratio * dvol_re[:, None]
        if not self.complex_mode:
            return assemble(self.h, np.real(d_re), self.sels)[:, self.cols]
        d_im = 1j * df * weight - ratio * dvol_im[:, None]
        Jr = assemble(self.h, d_re, self.sels)[:, self.cols]
        Ji = assemble(self.h, d_im, self.sels)[:, self.cols]
        return np.block([[Jr.real, Ji.real], [Jr.imag, Ji.imag]])

    def _plain_jacobian(self, V: np.ndarray) -> np.ndarray:
        J = self.raw_jacobian(V)
        if not self.complex_mode:
            return np.real(J)
        return np.block([[J.real, -J.imag], [J.imag, J.real]])

    def degenerate(self, V: np.ndarray, rel: float = 1e-8) -> bool:
        if self.h.m == 0:
            return False
        vol, A, _ = self.support_volumes(V)
        scale = np.maximum(1.0, np.abs(A).max(axis=(1, 2))) ** (self.dims.s - 1)
        return bool(np.any(vol <= rel * scale))


# --- fitted solve ---------------------------------------------------------

@dataclass
class SolveResult:
    vectors: np.ndarray
    residual: float
    jacobian_rank_at_solution: int
    free_coordinates: int
    restarts_used: int
    converged: bool
    field: str

    @property
    def full_rank(self) -> bool:
        return self.jacobian_rank_at_solution == self.free_coordinates

    def to_dict(self) -> dict:
        from .incidence import dictionary_to_dict

        return {
            "converged": self.converged,
            "field": self.field,
            "residual": self.residual,
            "rank": self.jacobian_rank_at_solution,
            "free_coordinates": self.free_coordinates,
            "restarts_used": self.restarts_used,
            "vectors": dictionary_to_dict(self.vectors)["vectors"],
        }


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return child_rng(seed, "restart", restart)


def solve_fitted(
    h: Hypergraph,
    pins,
    opts: SolveOptions | None = None,
    fixed: Mapping[int, np.ndarray] | None = None,
) -> SolveResult:
    """Find dictionary coordinates for the free vertices making every pin incident.

    Restarts are tried in index order; the first that converges to a
    non-degenerate solution with full incidence residual <= tol is returned.
    """
    opts = opts or SolveOptions()
    system = IncidenceSystem(
        h, pins, fixed, complex_mode=opts.field == "complex", equations=opts.equations,
        volume_weight=opts.volume_weight,
    )
    field = "complex" if system.complex_mode else "real"
    best = np.inf
    best_z = None
    for restart in range(opts.restarts):
        rng = _restart_rng(opts.seed, restart)
        z0 = rng.standard_normal(system.nvar)
        try:
            z = gauss_newton(system.residual, system.jacobian, z0, opts.tol, opts.max_iters, opts.damping).x
        except NoConvergence as exc:
            if exc.best_residual < best:
                best, best_z = exc.best_residual, exc.best_x
            continue
        V = system.vectors(z)
        res = _max_residual(h, V, system.pins)
        if res > opts.tol:
            try:
                z = gauss_newton(system.residual, system.jacobian, z, opts.tol * 1e-4, 20, 1e-12).x
            except NoConvergence as exc:
                z = exc.best_x
            V = system.vectors(z)
            res = _max_residual(h, V, system.pins)
        if res <= opts.tol and not system.degenerate(V):
            rank = numeric_rank(system.raw_jacobian(V)).rank if system.cols.size else 0
            return SolveResult(V, res, rank, int(system.cols.size), restart + 1, True, field)
        cost = float(np.linalg.norm(system.residual(z)))
        if cost < best:
            best, best_z = cost, z
    raise NoConvergence(
        f"no {field} solution after {opts.restarts} restarts (best residual {best:.3e})",
        best_x=None if best_z is None else system.vectors(best_z),
        best_residual=best,
    )


def _max_residual(h: Hypergraph, V: np.ndarray, pins: np.ndarray) -> float:
    r = pin_residuals(h, V, pins)
    return float(r.max()) if r.size else 0.0


@dataclass
class VerifyReport:
    passed: bool
    max_residual: float
    per_pin: np.ndarray
    tol: float

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_residual": self.max_residual,
            "per_pin": [float(x) for x in self.per_pin],
            "tol": self.tol,
        }


def verify_solution(h: Hypergraph, pins, vectors, tol: float = 1e-8) -> VerifyReport:
    pins = np.asarray(pins, dtype=float)
    V = np.asarray(vectors)
    d1 = h.dims.d - 1
    if V.shape != (h.n_vertices, d1):
        raise DimensionMismatch(f"dictionary shape {V.shape} != ({h.n_vertices}, {d1})")
    if pins.shape != (h.m, d1):
        raise DimensionMismatch(f"pins shape {pins.shape} != ({h.m}, {d1})")
    r = pin_residuals(h, V, pins)
    worst = float(r.max()) if r.size else 0.0
    return VerifyReport(worst <= tol, worst, r, tol)
