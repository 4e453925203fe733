"""Shared fixtures for the test suite."""
from orientcycle.cover import CoverInstance
from orientcycle.graph import Digraph

ANTI4 = (True, False, True, False)


def two_level_instance(paths_bits=ANTI4, d=2):
    """40 vertices where B-vertices of the second level only reach the
    threshold through first-level vertices.

    A+ = 0..15, A- = 16..31.  First level: 32, 33 (B+) and 34, 35 (B-), each
    with two private out-neighbours in A+ and two private in-neighbours in A-.
    X = {38}.  Second level: 36 (B+) and 37 (B-), each with one out-neighbour
    in A+ plus 32, 33, and one in-neighbour in A- plus 34, 35.
    """
    edges = []
    for k, v in enumerate((32, 33, 34, 35)):
        edges += [(v, 2 * k), (v, 2 * k + 1), (16 + 2 * k, v), (17 + 2 * k, v)]
    edges += [(38, 8), (38, 9), (24, 38), (25, 38)]
    for k, v in enumerate((36, 37)):
        edges += [(v, 10 + k), (v, 32), (v, 33), (26 + k, v), (34, v), (35, v)]
    D = Digraph.from_edges(40, edges)
    covered = [32, 33, 34, 35, 36, 37, 38]
    return CoverInstance(
        D, X={38}, B_plus={32, 33, 36}, B_minus={34, 35, 37},
        A_plus=set(range(16)), A_minus=set(range(16, 32)),
        paths=[paths_bits] * len(covered), f={v: i for i, v in enumerate(covered)}, d=d)
