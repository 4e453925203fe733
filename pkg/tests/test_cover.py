import pytest

from helpers import two_level_instance
from orientcycle.cover import (CoverInstance, build_hierarchy, cover, cover_path_problems,
                               hall_double_matching)
from orientcycle.errors import HallFailure, HierarchyFailure, InputError
from orientcycle.graph import Digraph


def _single(edges, n, X, Ap, Am, bits=(True, True)):
    return CoverInstance(Digraph.from_edges(n, edges), X=X, B_plus=(), B_minus=(), A_plus=Ap, A_minus=Am,
                         paths=[bits] * len(X), f={v: i for i, v in enumerate(sorted(X))}, d=1)


def test_empty_b_gives_zero_levels():
    inst = _single([(4, 0), (4, 1), (2, 4), (3, 4)], 5, {4}, {0, 1}, {2, 3})
    hier = build_hierarchy(inst)
    assert hier.r == 0


def test_one_level_when_a_is_adjacent():
    edges = [(4, 0), (4, 1), (2, 4), (3, 4), (5, 0), (5, 1), (2, 5), (3, 5)]
    inst = CoverInstance(Digraph.from_edges(6, edges), X={4}, B_plus={5}, B_minus=(), A_plus={0, 1},
                         A_minus={2, 3}, paths=[(True, True)] * 2, f={4: 0, 5: 1}, d=2)
    assert build_hierarchy(inst).r == 1


def test_two_level_hierarchy():
    hier = build_hierarchy(two_level_instance())
    assert hier.r == 2
    assert hier.level(1) == {32, 33, 34, 35}
    assert hier.new_at(2) == {36, 37}


def test_hierarchy_failure_names_stuck_vertices():
    inst = two_level_instance(d=3)
    with pytest.raises(HierarchyFailure) as exc:
        build_hierarchy(inst)
    assert set(exc.value.diagnostics["uncovered"]) == {32, 33, 34, 35, 36, 37}


def test_instance_validation():
    with pytest.raises(InputError):
        CoverInstance(Digraph.empty(4), X={0}, B_plus={0}, B_minus=(), A_plus=(), A_minus=(),
                      paths=[(True, True)], f={0: 0}, d=1)


def test_star_matching_takes_first_neighbours():
    inst = _single([(4, 0), (4, 1), (4, 5), (2, 4), (3, 4)], 6, {4}, {0, 1, 5}, {2, 3})
    m = hall_double_matching(inst, build_hierarchy(inst), "+")
    assert m.images(4) == (0, 1)


@pytest.mark.parametrize("shared,ok", [(4, True), (3, False), (2, False), (1, False)])
def test_two_left_vertices_sharing_right(shared, ok):
    right = list(range(shared))
    n = shared + 4
    x, y = shared, shared + 1
    ins = [shared + 2, shared + 3]
    edges = [(v, r) for v in (x, y) for r in right] + [(a, v) for v in (x, y) for a in ins]
    inst = _single(edges, n, {x, y}, set(right), set(ins))
    hier = build_hierarchy(inst)
    if ok:
        m = hall_double_matching(inst, hier, "+")
        imgs = [*m.images(x), *m.images(y)]
        assert len(set(imgs)) == 4 and all(inst.D.has_edge(v, w) for v in (x, y) for w in m.images(v))
    else:
        with pytest.raises(HallFailure) as exc:
            hall_double_matching(inst, hier, "+")
        U = set(exc.value.diagnostics["witness"])
        assert U <= {x, y} and len(exc.value.diagnostics["neighbourhood"]) < 2 * len(U)


def test_minimal_cover_path():
    inst = _single([(4, 0), (4, 1), (2, 4), (3, 4)], 5, {4}, {0, 1}, {2, 3})
    hier, _, res = cover(inst)
    (Q,) = res.chosen()
    assert Q.vertices == (2, 4, 0) and Q.centre == 4
    assert not cover_path_problems(inst, hier, Q)


def test_empty_instance_empty_family():
    inst = CoverInstance(Digraph.empty(3), X=(), B_plus=(), B_minus=(), A_plus={0}, A_minus={1},
                         paths=[], f={}, d=1)
    _, _, res = cover(inst)
    assert res.selected == []


def test_two_level_paths_and_selection():
    inst = two_level_instance()
    hier, m, res = cover(inst)
    for s in "+-":
        imgs = list(m[s].g1.values()) + list(m[s].g2.values())
        assert len(set(imgs)) == len(imgs)
    assert res.paths[36].vertices == (16, 32, 36, 10)
    assert res.paths[37].vertices == (18, 33, 37, 11)
    assert res.selected == [38, 36, 37, 34, 35]
    assert res.bbar == {2: [36, 37], 1: [34, 35]}
    for Q in res.chosen():
        assert len(Q.vertices) - 1 <= 2 * hier.r
        # levels drop strictly walking away from the centre, down to A
        for side in (Q.vertices[Q.vertices.index(Q.centre)::-1], Q.vertices[Q.vertices.index(Q.centre):]):
            inner = [w for w in side if w in inst.covered]
            levels = [hier.index(w, inst) for w in inner]
            assert levels == sorted(set(levels), reverse=True)
            assert side[-1] in inst.A
        # orientation against the slice
        bitsP = inst.paths[Q.index]
        for t in range(Q.lo, Q.hi):
            a, b = Q.at(t), Q.at(t + 1)
            assert inst.D.has_edge(a, b) if bitsP[inst.half + t] else inst.D.has_edge(b, a)
