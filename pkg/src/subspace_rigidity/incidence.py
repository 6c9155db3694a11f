"""Pins, dictionaries and frameworks in the affine chart R^{d-1}.

A pin ``x`` with support ``(v_1, ..., v_s)`` is incident when every s x s
minor of the matrix with rows ``v_i - x`` vanishes, i.e. ``x`` lies on the
affine hull of its support.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ChartFailure, DimensionMismatch, ParseError, ZeroVector
from .hypergraph import Dims, Hypergraph
from .seeding import child_rng


@dataclass(frozen=True)
class Pin:
    x: tuple[float, ...]
    edge_id: int


@dataclass(frozen=True, eq=False)
class Dictionary:
    vectors: np.ndarray  # (n, d-1), real or complex

    def __eq__(self, other):
        return isinstance(other, Dictionary) and np.array_equal(self.vectors, other.vectors)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]


@dataclass(frozen=True, eq=False)
class Framework:
    h: Hypergraph
    pins: np.ndarray  # (m, d-1), row k is the pin on edge k
    dictionary: Dictionary

    def __post_init__(self):
        d1 = self.h.dims.d - 1
        if self.pins.shape != (self.h.m, d1):
            raise DimensionMismatch(f"pins shape {self.pins.shape} != ({self.h.m}, {d1})")
        if self.dictionary.vectors.shape != (self.h.n_vertices, d1):
            raise DimensionMismatch(
                f"dictionary shape {self.dictionary.vectors.shape} != ({self.h.n_vertices}, {d1})"
            )

    def __eq__(self, other):
        return (
            isinstance(other, Framework)
            and self.h == other.h
            and np.array_equal(self.pins, other.pins)
            and self.dictionary == other.dictionary
        )

    @property
    def dims(self) -> Dims:
        return self.h.dims

    @property
    def vectors(self) -> np.ndarray:
        return self.dictionary.vectors

    def pin_list(self) -> list[Pin]:
        return [Pin(tuple(map(float, x)), k) for k, x in enumerate(self.pins)]


def incidence_matrix(fw: Framework, pin_id: int) -> np.ndarray:
    """The s x (d-1) matrix whose rows are ``v_i - x`` over the pin's support."""
    edge = fw.h.edges[pin_id]
    return fw.vectors[list(edge)] - fw.pins[pin_id]


def support_matrices(h: Hypergraph, vectors: np.ndarray, pins: np.ndarray) -> np.ndarray:
    """Stacked incidence matrices, shape (m, s, d-1)."""
    idx = np.asarray(h.edges, dtype=np.intp).reshape(h.m, h.dims.s)
    return vectors[idx] - pins[:, None, :]


def pin_residuals(h: Hypergraph, vectors: np.ndarray, pins: np.ndarray) -> np.ndarray:
    """Per-pin sigma_s / max(1, sigma_1) of the incidence matrix."""
    if h.m == 0:
        return np.zeros(0)
    sv = np.linalg.svd(support_matrices(h, vectors, pins), compute_uv=False)
    return sv[:, h.dims.s - 1] / np.maximum(1.0, sv[:, 0])


@dataclass(frozen=True)
class ResidualReport:
    per_pin: np.ndarray
    max: float


def incidence_residual(fw: Framework) -> ResidualReport:
    r = pin_residuals(fw.h, fw.vectors, fw.pins)
    return ResidualReport(r, float(r.max()) if r.size else 0.0)


def affine_weights(rng: np.random.Generator, s: int, min_sum: float = 1e-3) -> np.ndarray:
    while True:
        raw = rng.standard_normal(s)
        total = raw.sum()
        if abs(total) >= min_sum:
            return raw / total


def random_framework(h: Hypergraph, seed) -> Framework:
    """Gaussian dictionary; each pin an affine combination of its support."""
    rng = child_rng(seed, "framework")
    d1 = h.dims.d - 1
    vectors = rng.standard_normal((h.n_vertices, d1))
    pins = np.empty((h.m, d1))
    for k, edge in enumerate(h.edges):
        c = affine_weights(rng, h.dims.s)
        pins[k] = c @ vectors[list(edge)]
    return Framework(h, pins, Dictionary(vectors))


def min_dictionary_size(m: int, dims: Dims) -> int:
    if m < 0:
        raise ValueError("pin count must be nonnegative")
    return -(-(dims.copies * m) // (dims.d - 1))


@dataclass(frozen=True)
class Chart:
    points: np.ndarray  # (m, d-1)
    rotation: np.ndarray  # (d, d) orthogonal, applied before dehomogenizing


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def chart_from_homogeneous(points, seed=None, rotation=None, max_tries: int = 16) -> Chart:
    """Rotate homogeneous points once and divide by the last coordinate.

    A fixed ``rotation`` is used as given (no retries); otherwise rotations are
    drawn from ``seed`` until every point is safely off the hyperplane at infinity.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    norms = np.linalg.norm(pts, axis=1)
    if np.any(norms == 0):
        raise ZeroVector("homogeneous point of zero length")
    d = pts.shape[1]
    if rotation is not None:
        rotations = [np.asarray(rotation, dtype=float)]
    else:
        rng = np.random.default_rng() if seed is None else child_rng(seed, "chart")
        rotations = (random_rotation(d, rng) for _ in range(max_tries))
    for rot in rotations:
        y = pts @ rot.T
        last = y[:, -1]
        if np.all(np.abs(last) >= 1e-9 * norms):
            return Chart(y[:, :-1] / last[:, None], rot)
    raise ChartFailure("points too close to the hyperplane at infinity under every rotation tried")


# --- JSON codecs ----------------------------------------------------------

def _check_fields(obj, allowed: set[str], what: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{what} JSON must be an object")
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError(f"unknown field(s) in {what}: {sorted(unknown)}")
    missing = allowed - set(obj)
    if missing:
        raise ParseError(f"missing field(s) in {what}: {sorted(missing)}")


def _float_rows(rows, width: int | None, what: str) -> np.ndarray:
    try:
        arr = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: {exc}") from exc
    if arr.size == 0:
        arr = arr.reshape(0, width or 0)
    if arr.ndim != 2 or (width is not None and arr.shape[1] != width):
        raise ParseError(f"{what}: expected rows of length {width}")
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{what}: non-finite coordinate")
    return arr


def pins_to_dict(pins: np.ndarray) -> dict:
    return {"pins": [{"edge": k, "x": [float(v) for v in x]} for k, x in enumerate(pins)]}


def pins_from_dict(obj, dims: Dims | None = None, m: int | None = None) -> np.ndarray:
    """Pins JSON to an (m, d-1) array ordered by edge id."""
    _check_fields(obj, {"pins"}, "pins")
    entries = obj["pins"]
    if not isinstance(entries, list):
        raise ParseError("pins must be a list")
    width = None if dims is None else dims.d - 1
    rows: dict[int, list] = {}
    for entry in entries:
        _check_fields(entry, {"edge", "x"}, "pin")
        e = entry["edge"]
        if not isinstance(e, int) or isinstance(e, bool) or e < 0 or e in rows:
            raise ParseError(f"bad or duplicate pin edge id {e!r}")
        rows[e] = entry["x"]
    count = len(rows) if m is None else m
    if sorted(rows) != list(range(count)):
        raise ParseError(f"pin edge ids must be exactly 0..{count - 1}")
    return _float_rows([rows[i] for i in range(count)], width, "pins")


def points_from_dict(obj) -> np.ndarray:
    _check_fields(obj, {"points"}, "points")
    return _float_rows(obj["points"], None, "points")


def dictionary_to_dict(vectors: np.ndarray) -> dict:
    if np.iscomplexobj(vectors):
        return {"vectors": [[[float(z.real), float(z.imag)] for z in row] for row in vectors]}
    return {"vectors": [[float(v) for v in row] for row in vectors]}


def dictionary_from_dict(obj, dims: Dims | None = None) -> Dictionary:
    _check_fields(obj, {"vectors"}, "dictionary")
    width = None if dims is None else dims.d - 1
    return Dictionary(_float_rows(obj["vectors"], width, "dictionary"))


def load_json(path) -> object:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON in {path}: {exc}") from exc


def framework_from_parts(h: Hypergraph, pins: Sequence, vectors: Sequence) -> Framework:
    return Framework(h, np.asarray(pins, dtype=float), Dictionary(np.asarray(vectors)))
