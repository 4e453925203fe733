import math

import pytest

from orientcycle.errors import InputError
from orientcycle.experiments import hitting_times
from orientcycle.graph import Digraph, embedding_problems
from orientcycle.models import ProcessTrace, sample_dnp, sample_dstar, sample_process
from orientcycle.oracle import find_embedding
from orientcycle.params import DESK
from orientcycle.patterns import OrientationPattern
from orientcycle.pipeline import embed_cycle, process_embed
from orientcycle.rng import child, stream


def _host(n, rng):
    return sample_dnp(n, min(1.0, 20 * math.log(n) / n), rng)


def _one_failed_stage(report):
    assert report.failure_stage is not None
    assert sum(1 for s in report.stages if not s.ok) == 1


def test_anti_directed_n200_success_rate():
    n = 200
    C = OrientationPattern.anti_directed(n)
    ok = 0
    for s in range(100):
        rng = stream(51, s)
        D0 = _host(n, child(rng, 0))
        D1 = sample_dstar(n, DESK.sprinkle_q(n, 1), child(rng, 1))
        D2 = sample_dstar(n, DESK.sprinkle_q(n, 2), child(rng, 2))
        res = embed_cycle(D0, (), C, (0, n // 4), {}, (D1, D2), DESK, rng)
        if res.ok:
            ok += 1
            assert not embedding_problems(D0.union(D1).union(D2), C, res.embedding)
        else:
            _one_failed_stage(res.report)
    assert ok >= 80


def test_pins_land_on_their_vertices():
    n = 150
    rng = stream(52)
    D0 = _host(n, rng)
    C = OrientationPattern.random_with_changes(n, 40, 5)
    sp = DESK.spacing(n)
    f = {7: 3, 100: 3 + sp, 42: 3 + 2 * sp}
    res = embed_cycle(D0, f.keys(), C, (0, n // 4), f, None, DESK, rng)
    assert res.ok
    assert all(res.embedding.map[p] == x for x, p in f.items())
    assert not embedding_problems(res.host, C, res.embedding)


def test_input_errors():
    D0 = Digraph.complete(20)
    C = OrientationPattern.directed(20)
    with pytest.raises(InputError):
        embed_cycle(D0, {25}, C, (0, 5), {25: 0})
    with pytest.raises(InputError):
        embed_cycle(D0, {1}, C, (0, 5), {})
    with pytest.raises(InputError):
        embed_cycle(D0, (), OrientationPattern.directed(19), (0, 5), {})
    with pytest.raises(InputError):
        embed_cycle(D0, {1, 2}, C, (0, 5), {1: 0, 2: 1}, params=DESK)


def test_small_n_exact_route_matches_oracle():
    for s in range(40):
        rng = stream(53, s)
        D0 = sample_dnp(9, 0.35, rng)
        C = OrientationPattern(tuple(bool(b) for b in rng.integers(0, 2, 9)))
        empty = (Digraph.empty(9), Digraph.empty(9))
        res = embed_cycle(D0, {4}, C, (0, 8), {4: 2}, empty, DESK, rng)
        assert res.ok == (find_embedding(D0, C, pins={2: 4}) is not None)
        if not res.ok:
            _one_failed_stage(res.report)


def test_process_complete_prefix_shortcut():
    trace = sample_process(9, stream(54))
    res = process_embed(trace, trace.N, OrientationPattern.from_string("++-+--+-+"), DESK, stream(55))
    assert res.ok and res.report.stages[0].name == "shortcut"


def test_process_low_degree_rejected():
    trace = sample_process(30, stream(56))
    with pytest.raises(InputError):
        process_embed(trace, 5, OrientationPattern.directed(30), DESK)


def test_process_pattern_out_of_range():
    n = 40
    for s in range(200):
        trace = sample_process(n, stream(57, s))
        st = hitting_times(trace)
        if st.m0 <= st.m1:
            break
    else:
        pytest.skip("no trace with a zero semidegree at the degree-two time")
    res = process_embed(trace, st.m0, OrientationPattern.directed(n), DESK, stream(58))
    assert not res.ok and res.report.failure_stage == "classify"
    assert res.report.diagnostics["changes"] == 0
    _one_failed_stage(res.report)


def test_process_small_n_sound_against_oracle():
    claims = 0
    for s in range(60):
        rng = stream(59, s)
        trace = sample_process(12, child(rng, 0))
        i = hitting_times(trace).m0 + int(rng.integers(0, 20))
        C = OrientationPattern(tuple(bool(b) for b in rng.integers(0, 2, 12)))
        res = process_embed(trace, i, C, DESK, rng)
        if res.ok:
            claims += 1
            assert not embedding_problems(trace.prefix(i), C, res.embedding)
            assert find_embedding(trace.prefix(i), C) is not None
        else:
            _one_failed_stage(res.report)
    assert claims > 0


def test_trace_replay_is_deterministic():
    trace = sample_process(12, stream(60))
    again = ProcessTrace.loads(trace.dumps())
    i = hitting_times(trace).m0 + 10
    C = OrientationPattern.anti_directed(12)
    a = process_embed(trace, i, C, DESK, stream(61))
    b = process_embed(again, i, C, DESK, stream(61))
    assert a.ok == b.ok and (a.embedding == b.embedding)
    assert a.report.to_dict() == b.report.to_dict()
