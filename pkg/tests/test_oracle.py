import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from orientcycle.errors import InputError
from orientcycle.graph import Digraph, is_valid_embedding
from orientcycle.models import sample_dnp
from orientcycle.oracle import (contains_all_patterns, exact_containment_probability,
                                find_embedding)
from orientcycle.patterns import OrientationPattern
from orientcycle.rng import stream

TRIANGLE = Digraph.from_edges(3, [(0, 1), (1, 2), (2, 0)])


def test_triangle_examples():
    emb = find_embedding(TRIANGLE, OrientationPattern.directed(3))
    assert emb is not None and is_valid_embedding(TRIANGLE, OrientationPattern.directed(3), emb)
    assert find_embedding(TRIANGLE, OrientationPattern.from_string("++-")) is None


def test_complete_digraph_with_pin():
    C = OrientationPattern.from_string("+--++-+-")
    emb = find_embedding(Digraph.complete(8), C, pins={0: 3})
    assert emb.map[0] == 3 and is_valid_embedding(Digraph.complete(8), C, emb)


def test_bad_inputs():
    with pytest.raises(InputError):
        find_embedding(Digraph.complete(23), OrientationPattern.directed(23))
    with pytest.raises(InputError):
        find_embedding(Digraph.complete(5), OrientationPattern.directed(5), pins={0: 1, 1: 1})
    with pytest.raises(InputError):
        find_embedding(Digraph.complete(5), OrientationPattern.directed(6))


@settings(max_examples=150, deadline=None)
@given(st.integers(3, 7), st.floats(0.2, 0.9), st.integers(0, 2**32 - 1), st.data())
def test_pins_honoured_and_agree_with_brute_force(n, p, seed, data):
    D = sample_dnp(n, p, stream(seed))
    C = OrientationPattern(tuple(data.draw(st.lists(st.booleans(), min_size=n, max_size=n))))
    pos = data.draw(st.integers(0, n - 1))
    v = data.draw(st.integers(0, n - 1))
    emb = find_embedding(D, C, pins={pos: v})
    expected = any(
        perm[pos] == v and is_valid_embedding(D, C, _emb(n, perm))
        for perm in itertools.permutations(range(n)))
    assert (emb is not None) == expected
    if emb is not None:
        assert emb.map[pos] == v and is_valid_embedding(D, C, emb)


def _emb(n, perm):
    from orientcycle.graph import Embedding
    return Embedding(n, tuple(perm))


def test_adding_edges_keeps_containment():
    for chain in range(100):
        rng = stream(31, chain)
        C = OrientationPattern(tuple(bool(b) for b in rng.integers(0, 2, 8)))
        pairs = [(u, v) for u in range(8) for v in range(8) if u != v]
        order = [pairs[k] for k in rng.permutation(len(pairs))]
        seen = False
        D = Digraph.empty(8)
        for k in range(0, len(order), 4):
            D = D.with_edges(order[k:k + 4])
            now = find_embedding(D, C) is not None
            assert now or not seen
            seen = now
        assert seen


def test_contains_all_examples():
    assert contains_all_patterns(Digraph.complete(6)).all_contained
    D = Digraph.complete(6)
    D = Digraph.from_edges(6, [e for e in D.edges() if 5 not in e] + [(0, 5)])
    v = contains_all_patterns(D)
    assert not v.all_contained and v.checked == len(v.missing)
    # vertex 5 has no out-edge: directed missing, decided by the DP otherwise
    D = Digraph.from_edges(6, [e for e in Digraph.complete(6).edges() if e[0] != 5])
    v = contains_all_patterns(D)
    assert str(OrientationPattern.directed(6)) in {str(C) for C in v.missing}
    anti = OrientationPattern.anti_directed(6)
    assert (find_embedding(D, anti) is not None) == (str(anti.canonical()) not in {str(C) for C in v.missing})
    with pytest.raises(InputError):
        contains_all_patterns(Digraph.complete(15))


def test_exact_probabilities():
    C = OrientationPattern.directed(3)
    assert exact_containment_probability(3, 1, C) == 1
    assert exact_containment_probability(3, 0, C) == 0
    # two directed triangles on {0,1,2}, three edges each, sharing none
    assert exact_containment_probability(3, Fraction(1, 2), C) == Fraction(15, 64)
    with pytest.raises(InputError):
        exact_containment_probability(5, 0.5, OrientationPattern.directed(5))
