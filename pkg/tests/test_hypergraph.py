from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from subspace_rigidity.errors import EdgeSizeMismatch, InputError, ParseError, VertexOutOfRange
from subspace_rigidity.hypergraph import (
    Dims,
    codec_read,
    codec_write,
    complete,
    disjoint_union,
    expand,
    from_dict,
    g_dagger,
    new_hypergraph,
    project,
    tightness_counts,
)

from strategies import hypergraphs


def test_k4_from_all_pairs():
    h = new_hypergraph(4, Dims(4, 2), combinations(range(4), 2))
    assert h.m == 6
    assert h == complete(4, Dims(4, 2))


def test_edges_are_sorted_and_order_kept():
    h = new_hypergraph(3, Dims(3, 2), [(2, 0), (1, 0)])
    assert h.edges == ((0, 2), (0, 1))


def test_repeated_vertex_rejected():
    with pytest.raises(EdgeSizeMismatch):
        new_hypergraph(2, Dims(3, 2), [(0, 0)])


def test_wrong_edge_size_rejected():
    with pytest.raises(EdgeSizeMismatch):
        new_hypergraph(4, Dims(4, 2), [(0, 1, 2)])


def test_vertex_out_of_range():
    with pytest.raises(VertexOutOfRange):
        new_hypergraph(3, Dims(3, 2), [(0, 5)])


@pytest.mark.parametrize("d,s", [(2, 2), (3, 1), (3, 3), (4, 4)])
def test_bad_dims(d, s):
    with pytest.raises(InputError):
        Dims(d, s)


def test_expand_k4():
    eh = expand(complete(4, Dims(4, 2)))
    assert eh.n_edges == 12
    assert eh.edges[:4] == [(0, 1), (0, 1), (0, 2), (0, 2)]
    assert eh.expanded_id(3, 1) == 7
    assert eh.base_of(7) == (3, 1)


def test_expand_identity_when_one_copy():
    h = complete(5, Dims(3, 2))
    eh = expand(h)
    assert eh.edges == list(h.edges)
    assert tightness_counts(h) == tightness_counts(h).__class__(10, 10)


def test_counts():
    assert (tightness_counts(complete(4, Dims(4, 2))).lhs, tightness_counts(complete(4, Dims(4, 2))).rhs) == (12, 12)
    empty = new_hypergraph(0, Dims(3, 2), [])
    assert tightness_counts(empty).lhs == 0 and tightness_counts(empty).rhs == 0
    assert tightness_counts(complete(5, Dims(3, 2))).balanced


def test_induced_counts():
    h = complete(4, Dims(4, 2))
    c = tightness_counts(h, [0, 1, 2])
    assert (c.lhs, c.rhs) == (6, 9)


def test_g_dagger_shape():
    h = g_dagger()
    assert h.m == 8 and h.n_vertices == 4
    assert h.has_repeated_supports()
    assert tightness_counts(h).balanced


def test_codec_examples():
    h = complete(4, Dims(4, 2))
    assert codec_read(codec_write(h)) == h
    one = codec_read('{"d":4,"s":2,"n":4,"edges":[[0,1]]}')
    assert one.edges == ((0, 1),)
    with pytest.raises(ParseError):
        codec_read('{"d":4,"s":2,"n":4,"edges":[[0,0]]}')


@pytest.mark.parametrize(
    "text",
    [
        "{not json",
        '{"d":4,"s":2,"n":4,"edges":[],"extra":1}',
        '{"d":4,"s":2,"edges":[]}',
        '{"d":4,"s":2,"n":"4","edges":[]}',
        '{"d":4,"s":2,"n":4,"edges":[[0,1.5]]}',
        '{"d":4,"s":2,"n":4,"edges":[[0,7]]}',
        '{"d":2,"s":2,"n":4,"edges":[]}',
        "[1, 2]",
    ],
)
def test_codec_rejects(text):
    with pytest.raises(ParseError):
        codec_read(text)


def test_from_dict_rejects_bool():
    with pytest.raises(ParseError):
        from_dict({"d": 4, "s": 2, "n": True, "edges": []})


@given(hypergraphs())
def test_codec_round_trip(h):
    assert codec_read(codec_write(h)) == h


@given(hypergraphs())
def test_expand_then_project(h):
    eh = expand(h)
    assert eh.n_edges == h.dims.copies * h.m
    assert project(eh) == h.edges
    ids = [eh.expanded_id(b, c) for b in range(h.m) for c in range(eh.copies_per_edge)]
    assert ids == list(range(eh.n_edges))


@given(st.data())
def test_counts_additive_over_unions(data):
    a = data.draw(hypergraphs())
    b = data.draw(hypergraphs(dims=a.dims))
    u = disjoint_union(a, b)
    ca, cb, cu = tightness_counts(a), tightness_counts(b), tightness_counts(u)
    assert (cu.lhs, cu.rhs) == (ca.lhs + cb.lhs, ca.rhs + cb.rhs)
