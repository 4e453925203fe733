import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orientcycle.errors import InputError
from orientcycle.graph import Digraph
from orientcycle.models import (CouplingRandomness, ProcessTrace, chain_edges, coupling_chain, exact_chain_probability,
                                monotone_family_check, prefix, sample_dnp, sample_dstar, sample_gnp, sample_process)
from orientcycle.oracle import find_embedding
from orientcycle.patterns import OrientationPattern
from orientcycle.rng import stream


def test_dnp_extremes():
    rng = stream(1)
    assert sample_dnp(6, 0.0, rng).m == 0
    assert sample_dnp(6, 1.0, rng) == Digraph.complete(6)
    with pytest.raises(InputError):
        sample_dnp(5, 1.5, rng)


def test_dnp_mean_edges():
    rng = stream(2)
    counts = np.array([sample_dnp(5, 0.5, rng).m for _ in range(20_000)])
    sigma = math.sqrt(20 * 0.25 / len(counts))
    assert abs(counts.mean() - 10) < 3 * sigma


def test_dstar_symmetric_and_marginal():
    rng = stream(3)
    assert sample_dstar(5, 1.0, rng) == Digraph.complete(5)
    hits = 0
    N = 20_000
    for _ in range(N):
        D = sample_dstar(4, 0.3, rng)
        for u, v in D.edges():
            assert D.has_edge(v, u)
        hits += D.has_edge(0, 1)
    assert abs(hits / N - 0.3) < 3 * math.sqrt(0.21 / N)


def test_gnp_symmetric():
    G = sample_gnp(30, 0.2, stream(4))
    assert all(G.has_edge(v, u) for u, v in G.edges())


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 7), st.integers(0, 2**32 - 1))
def test_process_is_permutation_and_prefix_monotone(n, seed):
    trace = sample_process(n, stream(seed))
    order = trace.order
    assert len(order) == n * (n - 1) == len(set(order))
    prev = prefix(trace, 0)
    assert prev.m == 0
    for i in range(1, trace.N + 1):
        cur = trace.prefix(i)
        assert cur.m == i and prev.union(cur) == cur
        prev = cur
    assert prev == Digraph.complete(n)
    with pytest.raises(InputError):
        trace.prefix(trace.N + 1)


def test_process_two_vertices_uniform():
    N = 20_000
    rng = stream(5)
    first = sum(sample_process(2, rng).edge(1) == (0, 1) for _ in range(N))
    assert abs(first / N - 0.5) < 3 * math.sqrt(0.25 / N)


def test_trace_round_trip():
    trace = sample_process(6, stream(6))
    text = trace.dumps()
    assert ProcessTrace.loads(text).order == trace.order
    assert ProcessTrace.loads(text).dumps() == text


def test_same_seed_same_objects():
    assert sample_dnp(40, 0.1, stream(7, 1)) == sample_dnp(40, 0.1, stream(7, 1))
    assert sample_process(9, stream(7, 2)).dumps() == sample_process(9, stream(7, 2)).dumps()


def test_chain_two_vertices():
    R = CouplingRandomness.sample(2, 0.5, stream(8), batch=40_000)
    N = 40_000
    sig = 3 * math.sqrt(0.25 / N)
    f0, b0 = chain_edges(R, 0)
    f1, b1 = chain_edges(R, 1)
    assert abs((f0 & b0).mean() - 0.5) < sig
    assert abs((f1 & b1).mean() - 0.25) < 3 * math.sqrt(0.1875 / N)


def test_chain_locality_single_draws():
    rng = stream(9)
    for _ in range(50):
        R = CouplingRandomness.sample(6, 0.4, rng)
        prev = set(coupling_chain(R, 0).edges())
        for j in range(1, R.ell + 1):
            cur = set(coupling_chain(R, j).edges())
            diff = prev ^ cur
            assert len({frozenset(e) for e in diff}) <= 1
            prev = cur
    with pytest.raises(InputError):
        coupling_chain(R, R.ell + 1)


def test_monotone_check_trivial_families():
    rng = stream(10)
    r = monotone_family_check(None, lambda D: True, 0.3, 4, 200, rng)
    assert r.freq_j0 == r.freq_jl == 1.0
    r = monotone_family_check(None, lambda D: D.m > 0, 1.0, 4, 50, rng)
    assert r.freq_j0 == r.freq_jl == 1.0


def test_monotone_check_directed_four_cycle():
    C = OrientationPattern.directed(4)
    r = monotone_family_check(None, lambda D: find_embedding(D, C) is not None, 0.3, 4, 20_000, stream(11))
    assert r.freq_jl >= r.freq_j0 - 3 * math.sqrt(2 * r.freq_jl / r.trials)


def test_exact_chain_end_points():
    # at j = 0 every pair is symmetric, so P(0->1 and 1->0) = p
    both = lambda D: D.has_edge(0, 1) and D.has_edge(1, 0)
    p = Fraction(1, 3)
    assert exact_chain_probability(2, p, 0, both) == p
    assert exact_chain_probability(2, p, 1, both) == p * p
