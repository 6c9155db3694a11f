import numpy as np
import pytest

from subspace_rigidity.errors import DimensionMismatch, InputError, TooFewPins
from subspace_rigidity.hypergraph import Dims, complete, new_hypergraph
from subspace_rigidity.incidence import min_dictionary_size, random_framework
from subspace_rigidity.learn import (
    build_block,
    build_seed_graph,
    choose_k,
    construct_hypergraph,
    learn_dictionary,
    plant,
)
from subspace_rigidity.rigidity import modular_generic_rank
from subspace_rigidity.solver import SolveOptions, verify_solution
from subspace_rigidity.sparsity import RigidityKind, check_rigidity_combinatorial

D32, D42, D53 = Dims(3, 2), Dims(4, 2), Dims(5, 3)


@pytest.mark.parametrize("dims,k", [(D32, 5), (D42, 2), (D53, 3), (Dims(4, 3), 6), (Dims(5, 4), 7), (Dims(5, 2), 2)])
def test_choose_k(dims, k):
    from math import comb

    assert choose_k(dims) == k
    assert comb(k * dims.copies, dims.s) >= k * (dims.d - 1)
    assert k == 1 or comb((k - 1) * dims.copies, dims.s) < (k - 1) * (dims.d - 1)


def test_seed_graph_forced_cases():
    assert set(build_seed_graph(D32, 0).edges) == set(complete(5, D32).edges)
    assert set(build_seed_graph(D42, 0).edges) == set(complete(4, D42).edges)


def test_seed_graph_53():
    h0 = build_seed_graph(D53, 1)
    assert h0.n_vertices == 6 and h0.m == 12
    assert not h0.has_repeated_supports()
    assert check_rigidity_combinatorial(h0).kind is RigidityKind.MINIMALLY_RIGID
    assert modular_generic_rank(h0).rank == 24


def test_block_32_shape():
    h0 = build_seed_graph(D32, 0)
    b = build_block(D32, h0, 0)
    assert b.n_new == 1 and len(b.edges) == 2
    assert all(5 in e for e in b.edges)
    assert len(b.base) == 2


@pytest.mark.parametrize("dims", [D42, D53, Dims(4, 3)])
def test_block_valid(dims):
    h0 = build_seed_graph(dims, 2)
    b = build_block(dims, h0, 2)
    new = set(range(h0.n_vertices, h0.n_vertices + dims.copies))
    assert len(b.edges) == dims.d - 1
    assert all(new & set(e) for e in b.edges)
    assert new <= {v for e in b.edges for v in e}
    union = new_hypergraph(h0.n_vertices + dims.copies, dims, list(h0.edges) + list(b.edges))
    assert check_rigidity_combinatorial(union).kind is RigidityKind.MINIMALLY_RIGID


def test_block_deterministic():
    h0 = build_seed_graph(D42, 0)
    assert build_block(D42, h0, 5) == build_block(D42, h0, 5)


def test_construct_110():
    h, plan = construct_hypergraph(110, D32, 0)
    assert (h.n_vertices, h.m, plan.blocks, plan.leftover) == (55, 110, 50, 0)
    assert check_rigidity_combinatorial(h).kind is RigidityKind.MINIMALLY_RIGID


def test_construct_exact_seed():
    h, plan = construct_hypergraph(6, D42, 0)
    assert (h.n_vertices, plan.blocks, plan.leftover) == (4, 0, 0)


def test_construct_partial():
    h, plan = construct_hypergraph(11, D32, 0)
    assert (plan.blocks, plan.leftover, h.n_vertices) == (0, 1, 6)
    assert h.n_vertices == min_dictionary_size(11, D32)


def test_too_few_pins():
    with pytest.raises(TooFewPins):
        construct_hypergraph(5, D32, 0)
    with pytest.raises(TooFewPins):
        learn_dictionary(np.zeros((5, 2)), D32)


@pytest.mark.parametrize("dims", [D32, D42, D53])
@pytest.mark.parametrize("extra", range(6))
def test_size_law(dims, extra):
    m = choose_k(dims) * (dims.d - 1) + extra
    h, plan = construct_hypergraph(m, dims, 0)
    assert h.m == m
    n_min = min_dictionary_size(m, dims)
    if plan.leftover == 0:
        assert h.n_vertices * (dims.d - 1) == dims.copies * m
        assert check_rigidity_combinatorial(h).kind is RigidityKind.MINIMALLY_RIGID
    assert n_min <= h.n_vertices <= n_min + dims.copies


def test_learn_planted_110():
    fw = plant(110, D32, 0)
    res = learn_dictionary(fw.pins, D32, seed=0)
    assert res.n == 55 and res.residual < 1e-8
    assert verify_solution(res.h, fw.pins, res.vectors).passed
    assert res.stages[0].stage == "h0" and len(res.stages) == 51


def test_learn_planted_42():
    fw = plant(12, D42, 1)
    res = learn_dictionary(fw.pins, D42, seed=1)
    assert res.n == 8 and res.residual < 1e-8


def test_learn_with_leftover():
    fw = plant(13, D32, 0)
    res = learn_dictionary(fw.pins, D32, seed=0)
    assert res.n == 7 and res.plan.leftover == 1
    assert res.stages[-1].stage == "partial"
    assert res.residual < 1e-8


def test_block_order_irrelevant():
    fw = plant(30, D32, 0)
    a = learn_dictionary(fw.pins, D32, seed=0)
    b = learn_dictionary(fw.pins, D32, seed=0, block_order=list(range(9, -1, -1)))
    assert a.residual < 1e-8 and b.residual < 1e-8
    np.testing.assert_array_equal(a.vectors, b.vectors)
    with pytest.raises(InputError):
        learn_dictionary(fw.pins, D32, seed=0, block_order=[0, 1])


def test_threads_deterministic():
    fw = plant(40, D32, 4)
    a = learn_dictionary(fw.pins, D32, seed=4)
    b = learn_dictionary(fw.pins, D32, seed=4, threads=4)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_homogeneous_input():
    fw = plant(14, D32, 2)
    homog = np.hstack([fw.pins, np.ones((14, 1))]) * np.linspace(1, 3, 14)[:, None]
    res = learn_dictionary(homog, D32, seed=2, opts=SolveOptions(field="complex"))
    assert res.chart_rotation is not None
    assert res.residual < 1e-8
    assert verify_solution(res.h, res.pins, res.vectors).passed


def test_bad_width():
    with pytest.raises(DimensionMismatch):
        learn_dictionary(np.zeros((10, 5)), D32)


def test_result_dict():
    fw = plant(12, D32, 0)
    d = learn_dictionary(fw.pins, D32, seed=0).to_dict()
    assert d["n"] == 6 and d["m"] == 12
    assert d["plan"]["t"] == 1 and d["plan"]["r"] == 0
    assert len(d["dictionary"]) == 6
