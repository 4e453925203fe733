"""Covering the exceptional and bad vertices by short pattern-following paths.

Every vertex of X u B gets a path through it that copies a slice of the
pattern with the slice midpoint at that vertex, and whose two ends sit in
the well-behaved part A+ u A-.  The construction has three layers:

* a level hierarchy on B (vertices that see enough of A, then enough of
  A plus the previous level, and so on);
* two disjoint neighbour choices g1, g2 per vertex and sign, found as a
  bipartite matching where every left vertex has demand two;
* greedy growth of each path outward, always stepping down the hierarchy.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import CoverFailure, HallFailure, HierarchyFailure, InputError
from .graph import Digraph, bits, mask_of

SIGNS = ("+", "-")


def _flip(sign: str) -> str:
    return "-" if sign == "+" else "+"


@dataclass
class CoverInstance:
    D: Digraph
    X: frozenset
    B_plus: frozenset
    B_minus: frozenset
    A_plus: frozenset
    A_minus: frozenset
    paths: list  # orientation bits, each of length 2h, midpoint at index h
    f: dict  # vertex of X u B -> index into paths
    d: float
    level_budget: int | None = None

    def __post_init__(self):
        self.X = frozenset(self.X)
        self.B_plus = frozenset(self.B_plus)
        self.B_minus = frozenset(self.B_minus)
        self.A_plus = frozenset(self.A_plus)
        self.A_minus = frozenset(self.A_minus)
        self.paths = [tuple(bool(b) for b in p) for p in self.paths]
        self.f = dict(self.f)
        self.validate()

    # -- sets -----------------------------------------------------------
    @property
    def B(self) -> frozenset:
        return self.B_plus | self.B_minus

    @property
    def A(self) -> frozenset:
        return self.A_plus | self.A_minus

    @property
    def covered(self) -> frozenset:
        return self.X | self.B

    def A_of(self, sign: str) -> frozenset:
        return self.A_plus if sign == "+" else self.A_minus

    def B_of(self, sign: str) -> frozenset:
        return self.B_plus if sign == "+" else self.B_minus

    @property
    def half(self) -> int:
        return len(self.paths[0]) // 2 if self.paths else 0

    def validate(self) -> None:
        n = self.D.n
        groups = [("X", self.X), ("B+", self.B_plus), ("B-", self.B_minus),
                  ("A+", self.A_plus), ("A-", self.A_minus)]
        seen: dict[int, str] = {}
        for name, S in groups:
            for v in S:
                if not (0 <= v < n):
                    raise InputError(f"vertex {v} of {name} outside the digraph")
                if v in seen:
                    raise InputError(f"vertex {v} lies in both {seen[v]} and {name}")
                seen[v] = name
        if set(self.f) != set(self.covered):
            raise InputError("f must be defined exactly on X u B")
        if sorted(self.f.values()) != list(range(len(self.paths))):
            raise InputError("f must be a bijection onto the path indices")
        lengths = {len(p) for p in self.paths}
        if len(lengths) > 1 or any(L % 2 or L < 2 for L in lengths):
            raise InputError("paths must share one even length of at least 2")
        if self.d < 0:
            raise InputError("degree threshold must be non-negative")


# ---------------------------------------------------------------------------
# hierarchy


@dataclass
class Hierarchy:
    plus: list  # B_0+ .. B_r+ as frozensets
    minus: list
    first: dict  # v in B -> first level containing it

    @property
    def r(self) -> int:
        return len(self.plus) - 1

    def level(self, i: int) -> frozenset:
        return self.plus[i] | self.minus[i]

    def new_at(self, i: int) -> frozenset:
        """B_i minus B_{i-1}."""
        return self.level(i) - self.level(i - 1)

    def index(self, v: int, inst: CoverInstance) -> int:
        """Largest i with v in X u (B minus B_i)."""
        if v in inst.X:
            return self.r
        if v in self.first:
            return self.first[v] - 1
        raise InputError(f"vertex {v} is not in X u B")


def build_hierarchy(inst: CoverInstance, budget: int | None = None) -> Hierarchy:
    """Iterate the level rule until B is exhausted or nothing changes."""
    budget = inst.level_budget if budget is None else budget
    D = inst.D
    Bp, Bm = inst.B_plus, inst.B_minus
    Ap, Am = mask_of(inst.A_plus), mask_of(inst.A_minus)
    plus = [frozenset()]
    minus = [frozenset()]
    first: dict[int, int] = {}
    B = inst.B
    while len(plus[-1]) + len(minus[-1]) < len(B):
        i = len(plus)
        if budget is not None and i > budget:
            break
        out_ok = Ap | mask_of(plus[-1])
        in_ok = Am | mask_of(minus[-1])

        def qualifies(v):
            return (bin(D.out_adj[v] & out_ok).count("1") >= inst.d
                    and bin(D.in_adj[v] & in_ok).count("1") >= inst.d)

        np_ = frozenset(v for v in Bp if qualifies(v))
        nm_ = frozenset(v for v in Bm if qualifies(v))
        if np_ == plus[-1] and nm_ == minus[-1]:
            break
        plus.append(np_)
        minus.append(nm_)
        for v in (np_ | nm_) - first.keys():
            first[v] = i
    missing = B - first.keys()
    if missing:
        raise HierarchyFailure(
            f"{len(missing)} vertices of B never reach the degree threshold",
            uncovered=tuple(sorted(missing)), levels=len(plus) - 1, budget=budget)
    return Hierarchy(plus, minus, first)


# ---------------------------------------------------------------------------
# double matching


def aux_neighbours(inst: CoverInstance, hier: Hierarchy, sign: str) -> dict[int, list[int]]:
    """Right-hand neighbours of every x in X u B in the auxiliary graph.

    y is a neighbour of x if y is a sign-neighbour of x in D and either y is
    in A^sign, or y is in B^sign on a strictly lower level than x.  A-vertices
    are listed first.
    """
    adj = inst.D.adj(sign)
    Aset, Bset = inst.A_of(sign), inst.B_of(sign)
    out = {}
    for x in sorted(inst.covered):
        ix = hier.index(x, inst)
        nb = list(bits(adj[x]))
        a_side = [y for y in nb if y in Aset]
        b_side = [y for y in nb if y in Bset and hier.index(y, inst) < ix]
        out[x] = a_side + b_side
    return out


@dataclass
class DoubleMatching:
    sign: str
    g1: dict
    g2: dict

    def images(self, v: int) -> tuple[int, int]:
        return self.g1[v], self.g2[v]


def hall_double_matching(inst: CoverInstance, hier: Hierarchy, sign: str) -> DoubleMatching:
    """Two private neighbours per left vertex, via augmenting paths on the
    graph where every left vertex is split into two copies."""
    if sign not in SIGNS:
        raise InputError(f"sign must be '+' or '-', got {sign!r}")
    nbrs = aux_neighbours(inst, hier, sign)
    left = [(x, c) for x in sorted(nbrs) for c in (0, 1)]
    owner: dict[int, tuple[int, int]] = {}  # right vertex -> left copy
    match: dict[tuple[int, int], int] = {}

    def augment(copy, seen):
        for y in nbrs[copy[0]]:
            if y not in owner:
                owner[y] = copy
                match[copy] = y
                return True
        # iterative DFS over alternating paths
        stack = [(copy, iter(nbrs[copy[0]]))]
        trail = []
        while stack:
            cur, it = stack[-1]
            advanced = False
            for y in it:
                if y in seen:
                    continue
                seen.add(y)
                if y not in owner:
                    trail.append((cur, y))
                    for c, yy in trail:
                        owner[yy] = c
                        match[c] = yy
                    return True
                trail.append((cur, y))
                stack.append((owner[y], iter(nbrs[owner[y][0]])))
                advanced = True
                break
            if not advanced:
                stack.pop()
                if trail:
                    trail.pop()
        return False

    for copy in left:
        seen: set[int] = set()
        if not augment(copy, seen):
            # left copies reachable from ``copy`` by alternating paths span a
            # set whose neighbourhood is too small
            reach_left = {copy}
            frontier = [copy]
            while frontier:
                c = frontier.pop()
                for y in nbrs[c[0]]:
                    o = owner.get(y)
                    if o is not None and o not in reach_left:
                        reach_left.add(o)
                        frontier.append(o)
            U = frozenset(c[0] for c in reach_left)
            NU = set()
            for x in U:
                NU.update(nbrs[x])
            raise HallFailure(
                f"Hall condition fails for sign {sign}: |U|={len(U)}, |N(U)|={len(NU)}",
                witness=tuple(sorted(U)), neighbourhood=tuple(sorted(NU)), sign=sign)
    g1 = {x: match[(x, 0)] for x in nbrs}
    g2 = {x: match[(x, 1)] for x in nbrs}
    imgs = list(g1.values()) + list(g2.values())
    assert len(set(imgs)) == len(imgs), "matching images not distinct"
    return DoubleMatching(sign, g1, g2)


# ---------------------------------------------------------------------------
# cover paths


@dataclass
class CoverPath:
    """A path through ``centre`` copying slice ``index`` of the instance.

    ``vertices[j]`` sits at slice position ``lo + j`` relative to the
    midpoint, so the centre sits at relative position 0.
    """

    centre: int
    index: int
    lo: int
    vertices: tuple

    @property
    def hi(self) -> int:
        return self.lo + len(self.vertices) - 1

    @property
    def ends(self) -> tuple[int, int]:
        return self.vertices[0], self.vertices[-1]

    def at(self, offset: int) -> int:
        return self.vertices[offset - self.lo]


@dataclass
class CoverResult:
    paths: dict  # centre -> CoverPath, for every vertex of X u B
    selected: list  # centres of the chosen disjoint family, in selection order
    bbar: dict = field(default_factory=dict)  # level -> selected centres

    def chosen(self) -> list[CoverPath]:
        return [self.paths[v] for v in self.selected]


def _grow(inst: CoverInstance, v: int, match: dict[str, DoubleMatching]) -> CoverPath:
    bitsP = inst.paths[inst.f[v]]
    h = inst.half
    covered = inst.covered
    A = inst.A
    used = {v}
    sides = {}
    for direction in (1, -1):
        seq = []
        u, t = v, 0
        while u in covered:
            nt = t + direction
            if not (-h <= nt <= h):
                break
            fwd = bitsP[h + t] if direction == 1 else bitsP[h + t - 1]
            # walking right, a forward edge leaves u; walking left it enters u
            if direction == 1:
                sign = "+" if fwd else "-"
            else:
                sign = "-" if fwd else "+"
            cands = [w for w in match[sign].images(u) if w not in used]
            if not cands:
                break
            cands.sort(key=lambda w: (w not in A,))
            w = cands[0]
            used.add(w)
            seq.append(w)
            u, t = w, nt
        sides[direction] = seq
    left = list(reversed(sides[-1]))
    verts = tuple(left + [v] + sides[1])
    return CoverPath(v, inst.f[v], -len(left), verts)


def cover_path_problems(inst: CoverInstance, hier: Hierarchy, Q: CoverPath) -> list[str]:
    """Reasons ``Q`` is not a valid cover path."""
    out = []
    D = inst.D
    bitsP = inst.paths[Q.index]
    h = inst.half
    if Q.at(0) != Q.centre:
        out.append("centre not at the slice midpoint")
    if len(set(Q.vertices)) != len(Q.vertices):
        out.append("path repeats a vertex")
    if Q.lo < -h or Q.hi > h:
        out.append("path longer than its slice")
    for t in range(Q.lo, Q.hi):
        a, b = Q.at(t), Q.at(t + 1)
        fwd = bitsP[h + t]
        if fwd and not D.has_edge(a, b):
            out.append(f"missing edge {a}->{b}")
        if not fwd and not D.has_edge(b, a):
            out.append(f"missing edge {b}->{a}")
    covered = inst.covered
    for e in Q.ends:
        if e not in inst.A:
            out.append(f"endpoint {e} outside A")
    for w in Q.vertices[1:-1]:
        if w not in covered:
            out.append(f"interior vertex {w} outside X u B")
    # level index drops strictly moving away from the centre
    for side in (range(0, Q.lo - 1, -1), range(0, Q.hi + 1)):
        prev = None
        for t in side:
            w = Q.at(t)
            if w not in covered:
                break
            iw = hier.index(w, inst)
            if prev is not None and not iw < prev:
                out.append(f"level index does not decrease at {w}")
            prev = iw
    return out


def build_cover_paths(inst: CoverInstance, hier: Hierarchy,
                      matchings: dict[str, DoubleMatching]) -> CoverResult:
    """Grow one path per vertex of X u B and pick a disjoint covering family."""
    paths = {}
    for v in sorted(inst.covered):
        Q = _grow(inst, v, matchings)
        probs = cover_path_problems(inst, hier, Q)
        if probs:
            raise CoverFailure(f"cover path at {v}: {probs[0]}", v=v, problems=tuple(probs))
        paths[v] = Q
    selected = sorted(inst.X)
    taken: set[int] = set()
    for v in selected:
        taken.update(paths[v].vertices)
    bbar = {}
    for i in range(hier.r, 0, -1):
        pick = sorted(v for v in hier.new_at(i) if v not in taken)
        bbar[i] = pick
        for v in pick:
            taken.update(paths[v].vertices)
        selected.extend(pick)
    # disjointness and coverage
    owner: dict[int, int] = {}
    for v in selected:
        for w in paths[v].vertices:
            if w in owner:
                raise CoverFailure(f"cover paths of {owner[w]} and {v} meet at {w}",
                                   v=v, other=owner[w], vertex=w)
            owner[w] = v
    missing = inst.covered - owner.keys()
    if missing:
        v = min(missing)
        raise CoverFailure(f"vertex {v} of X u B is not covered", v=v,
                           uncovered=tuple(sorted(missing)))
    return CoverResult(paths, selected, bbar)


def cover(inst: CoverInstance) -> tuple[Hierarchy, dict, CoverResult]:
    """Hierarchy, both double matchings and the selected cover paths."""
    hier = build_hierarchy(inst)
    m = {s: hall_double_matching(inst, hier, s) for s in SIGNS}
    return hier, m, build_cover_paths(inst, hier, m)
