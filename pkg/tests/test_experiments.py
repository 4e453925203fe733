
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orientcycle.errors import InputError
from orientcycle.experiments import (COLUMNS, PROPERTY_NAMES, Row, _naive_stats, check_process_properties,
                                     dumps_csv, dumps_json, hitting_experiment, hitting_times, loads_csv, loads_json,
                                     paired_exact_test, scan_rows, summarize, threshold_scan, wilson_interval)
from orientcycle.models import ProcessTrace, sample_process
from orientcycle.patterns import OrientationPattern, p_threshold
from orientcycle.rng import stream


def test_two_vertex_hitting_times():
    st_ = hitting_times(ProcessTrace(2, order=[(0, 1), (1, 0)]))
    assert (st_.m0, st_.m1) == (2, 1)
    assert list(st_.s) == [2, 2, 0] and list(st_.t) == [0, 0, 2]


def test_hitting_times_match_naive_recomputation():
    for k in range(50):
        rng = stream(71, k)
        trace = sample_process(int(rng.integers(2, 21)), rng)
        a, b = hitting_times(trace), _naive_stats(trace)
        assert (a.m0, a.m1) == (b.m0, b.m1)
        assert np.array_equal(a.s, b.s) and np.array_equal(a.t, b.t)


def test_complete_and_empty_ends():
    trace = sample_process(7, stream(72))
    st_ = hitting_times(trace)
    assert st_.s[0] == 7 and st_.t[0] == 0
    assert st_.s[-1] == 0 and st_.t[-1] == 0


row_values = st.one_of(st.none(), st.integers(-10**6, 10**6))
rows = st.builds(Row, st.sampled_from(["hitting", "threshold-oracle"]), st.integers(3, 500), st.integers(0, 99),
                 row_values, row_values, st.one_of(st.none(), st.floats(0, 1)),
                 st.one_of(st.none(), st.text("+-", min_size=3, max_size=12)),
                 st.sampled_from(["m0", "frequency", "all_patterns"]),
                 st.one_of(st.integers(0, 10**6), st.floats(0, 1e6, allow_nan=False)))


@settings(max_examples=60, deadline=None)
@given(st.lists(rows, max_size=20))
def test_csv_and_json_round_trip(rs):
    text = dumps_csv(rs)
    assert text.splitlines()[0] == ",".join(COLUMNS)
    assert sorted(loads_csv(text), key=repr) == sorted(rs, key=repr)
    assert sorted(loads_json(dumps_json(rs, {"k": 1})), key=repr) == sorted(rs, key=repr)


def test_wilson_interval():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo, hi = wilson_interval(0, 50)
    assert lo == 0.0 and 0 < hi < 0.1
    lo, hi = wilson_interval(50, 50)
    assert hi == 1.0 and 0.9 < lo < 1
    lo, hi = wilson_interval(30, 100)
    # textbook value for 30/100 at 95%
    assert lo == pytest.approx(0.2189, abs=1e-4) and hi == pytest.approx(0.3958, abs=1e-4)


def test_hitting_experiment_rows():
    assert hitting_experiment(6, 0, 1) == []
    out = hitting_experiment(7, 6, 2)
    absent = summarize(out, "directed_absent")
    assert absent["successes"] == absent["trials"] == 6
    assert hitting_experiment(7, 6, 2, jobs=2) == out
    with pytest.raises(InputError):
        hitting_experiment(20, 1, 0)


def test_property_selection():
    trace = sample_process(400, stream(73))
    assert check_process_properties(trace, which=()).checks == {}
    rep = check_process_properties(trace, which=("RP9", "RP10", "RP12"))
    assert set(rep.checks) == {"RP9", "RP10", "RP12"}
    with pytest.raises(InputError) as exc:
        check_process_properties(trace, which=("RP5", "RP9"), cuts=(0, 0, 30, 20))
    assert "RP5" in str(exc.value) and "RP9" not in str(exc.value)


def _trace_starting_with(n, first):
    rest = [(u, v) for u in range(n) for v in range(n) if u != v and (u, v) not in first]
    return ProcessTrace(n, order=list(first) + rest)


def test_rp4_planted_triangle():
    # at the second cut vertex 0 has no in-edge; by the last cut 2->0 closes a triangle
    early = [(0, 1), (1, 2), (3, 4)]
    late = [(2, 0), (5, 6), (7, 8)]
    cuts = (0, 3, 4, 6)
    rep = check_process_properties(_trace_starting_with(10, early + late), which=("RP4",), cuts=cuts)
    assert not rep["RP4"].passed
    assert sorted(rep["RP4"].witness) == [0, 1, 2]
    clean = [(0, 1), (1, 2), (3, 4), (5, 6), (7, 8), (8, 9)]
    assert check_process_properties(_trace_starting_with(10, clean), which=("RP4",), cuts=cuts)["RP4"].passed


def test_rp_report_at_n2000():
    rep = check_process_properties(sample_process(2000, stream(76)), which=PROPERTY_NAMES,
                                   rng=stream(77), expansion_trials=20)
    assert set(rep.checks) == set(PROPERTY_NAMES)
    for c in rep.checks.values():
        assert c.passed or c.witness is not None or c.measured is not None


def test_threshold_scan_extremes():
    C = OrientationPattern.anti_directed(8)
    pts = threshold_scan(C, 8, [1.0, 0.0, 0.5], 20, seed=3)
    assert [p.p for p in pts] == [0.0, 0.5, 1.0]
    assert pts[0].frequency == 0.0 and pts[-1].frequency == 1.0
    assert pts[0].p_threshold == pytest.approx(p_threshold(C))
    assert len(scan_rows(pts, C, 8, 3)) == 3
    with pytest.raises(InputError):
        threshold_scan(C, 8, [0.5], 2, engine="magic")


def test_pipeline_engine_lower_bound_not_above_oracle():
    C = OrientationPattern.anti_directed(12)
    pipe = threshold_scan(C, 12, [0.5], 20, seed=4, engine="pipeline")
    orc = threshold_scan(C, 12, [0.5], 20, seed=4, engine="oracle")
    assert pipe[0].frequency <= orc[0].frequency


def test_paired_exact_test():
    assert paired_exact_test([1] * 10, [0] * 10) == pytest.approx(0.5 ** 10)
    assert paired_exact_test([1, 0], [1, 0]) == 1.0
