"""Rotation-extension with a fixed edge, e-boosters, and Hamilton path search."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import InputError
from .graph import UGraph, bits, full_mask
from .oracle import _layers, _popcount

BOOSTER_CAP = 18


def _same_edge(p, q) -> bool:
    return {p[0], p[1]} == {q[0], q[1]}


def rotate(path, pivot, fixed_edge=None, fixed_end=None) -> list:
    """Rotate ``path`` at its free end using the edge ``pivot`` = (u_l, u_i).

    Returns u_0 ... u_i u_l u_(l-1) ... u_(i+1).  The edge u_i u_(i+1) is
    removed, so it must not be the fixed edge.
    """
    path = list(path)
    if fixed_end is not None and path[0] != fixed_end:
        raise InputError("the fixed end must be the first vertex of the path")
    end, other = pivot
    if end != path[-1]:
        end, other = other, end
    if end != path[-1]:
        raise InputError("the pivot edge must contain the free endpoint")
    try:
        i = path.index(other)
    except ValueError:
        raise InputError("the pivot edge must join the free endpoint to the path") from None
    L = len(path) - 1
    if i >= L - 1:
        raise InputError("pivot to the neighbour of the endpoint is not a rotation")
    if fixed_edge is not None and _same_edge((path[i], path[i + 1]), fixed_edge):
        raise InputError("the rotation would delete the fixed edge")
    return path[: i + 1] + path[i + 1:][::-1]


# ---------------------------------------------------------------------------
# boosters


def _reach_from(adjs: np.ndarray, start: int, n: int) -> np.ndarray:
    """reach[f, S]: bitset of last vertices of paths from ``start`` with vertex set S,
    for each adjacency variant f (rows of ``adjs``, shape (F, n))."""
    F = adjs.shape[0]
    reach = np.zeros((F, 1 << n), dtype=adjs.dtype)
    reach[:, 1 << start] = 1 << start
    layers = _layers(n, start)
    for k in range(2, n + 1):
        layer = layers[k]
        for w in range(n):
            if w == start:
                continue
            sel = layer[(layer >> w) & 1 == 1]
            if sel.size == 0:
                continue
            hit = (reach[:, sel ^ (1 << w)] & adjs[:, w, None]) != 0
            if hit.any():
                reach[:, sel] |= hit.astype(adjs.dtype) << w
    return reach


def _subset_max(arr: np.ndarray, n: int) -> np.ndarray:
    """best[f, T] = max of arr[f, S] over S subset of T."""
    out = arr.copy()
    F = out.shape[0]
    for i in range(n):
        view = out.reshape(F, 1 << (n - i - 1), 2, 1 << i)
        np.maximum(view[:, :, 1, :], view[:, :, 0, :], out=view[:, :, 1, :])
    return out


def _longest_through(adjs: np.ndarray, a: int, b: int, n: int):
    """Longest path (in edges) through the edge ab, and Hamilton-cycle flags.

    A path through ab is a path ending at a, the edge ab, and a path starting
    at b, on disjoint vertex sets.  ``adjs`` must contain ab.
    """
    RA = _reach_from(adjs, a, n)
    RB = _reach_from(adjs, b, n)
    masks = np.arange(1 << n, dtype=np.int64)
    pc = _popcount(masks)
    has_a = (masks >> a) & 1 == 1
    has_b = (masks >> b) & 1 == 1
    sizeA = np.where((RA != 0) & has_a & ~has_b, pc, 0)
    bestA = _subset_max(sizeA, n)
    full = (1 << n) - 1
    comp = full ^ masks
    okB = (RB != 0) & has_b & ~has_a
    total = np.where(okB, pc[None, :] + bestA[:, comp], 0)
    longest = total.max(axis=1) - 1
    ham = ((RA[:, full] >> b) & 1) == 1
    return longest, ham


def _pairs(n):
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def booster_set(G: UGraph, e, cap: int = BOOSTER_CAP, chunk: int = 32) -> set:
    """All pairs f (as (u, v), u < v) that are e-boosters for G."""
    n = G.n
    if n > cap:
        raise InputError(f"booster computation limited to n <= {cap}")
    a, b = e
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise InputError("e must be a pair of distinct vertices")
    H = G.with_edges([(a, b)])
    base = np.array([H.adj], dtype=np.int32 if n < 31 else np.int64)
    L0, ham0 = _longest_through(base, a, b, n)
    if ham0[0]:
        return set(_pairs(n))
    # adding an existing edge changes nothing
    cands = [f for f in _pairs(n) if not H.has_edge(*f)]
    out = set()
    for s in range(0, len(cands), chunk):
        part = cands[s:s + chunk]
        adjs = np.repeat(base, len(part), axis=0)
        for r, (u, v) in enumerate(part):
            adjs[r, u] |= 1 << v
            adjs[r, v] |= 1 << u
        L, ham = _longest_through(adjs, a, b, n)
        for r, f in enumerate(part):
            if ham[r] or L[r] > L0[0]:
                out.add(f)
    return out


def _literal_longest_and_ham(adj: list, a: int, b: int, n: int):
    """Pure-Python subset DP over paths from every start, tracking use of ab."""
    with_e = {}
    without = {}
    for v in range(n):
        without[1 << v] = without.get(1 << v, 0) | (1 << v)
    best = -1
    for mask in sorted(set(range(1, 1 << n)), key=int.bit_count):
        we = with_e.get(mask, 0)
        wo = without.get(mask, 0)
        if not (we or wo):
            continue
        if we:
            best = max(best, mask.bit_count() - 1)
        for last in bits(we | wo):
            for w in bits(adj[last] & ~mask):
                nm = mask | (1 << w)
                uses = {last, w} == {a, b}
                if we >> last & 1 or uses:
                    with_e[nm] = with_e.get(nm, 0) | (1 << w)
                if wo >> last & 1 and not uses:
                    without[nm] = without.get(nm, 0) | (1 << w)
    # Hamilton cycle through ab: Hamilton path from a to b
    reach = {1 << a: 1 << a}
    for mask in sorted(range(1, 1 << n), key=int.bit_count):
        r = reach.get(mask, 0)
        for last in bits(r):
            for w in bits(adj[last] & ~mask):
                reach[mask | 1 << w] = reach.get(mask | 1 << w, 0) | (1 << w)
    ham = bool(reach.get((1 << n) - 1, 0) >> b & 1) and n >= 3
    return best, ham


def booster_set_literal(G: UGraph, e, cap: int = 12) -> set:
    """Boosters by applying the definition to each pair separately (slow)."""
    n = G.n
    if n > cap:
        raise InputError(f"literal booster check limited to n <= {cap}")
    a, b = e
    H = G.with_edges([(a, b)])
    L0, _ = _literal_longest_and_ham(list(H.adj), a, b, n)
    out = set()
    for f in _pairs(n):
        Hf = H.with_edges([f])
        L, ham = _literal_longest_and_ham(list(Hf.adj), a, b, n)
        if ham or L > L0:
            out.add(f)
    return out


# ---------------------------------------------------------------------------
# Hamilton x,y-path by rotation-extension


@dataclass
class PosaOutcome:
    path: list | None
    consumed: list = field(default_factory=list)
    rotations: int = 0
    extensions: int = 0

    @property
    def found(self) -> bool:
        return self.path is not None


class _Search:
    def __init__(self, G: UGraph, x: int, y: int):
        self.n = G.n
        self.adj = list(G.adj)
        self.x, self.y = x, y
        self.e = (x, y)
        self.adj[x] |= 1 << y
        self.adj[y] |= 1 << x
        self.path = [x, y]
        self.on = (1 << x) | (1 << y)
        self.full = full_mask(self.n)
        self.rotations = 0
        self.extensions = 0

    def add_edge(self, u: int, v: int) -> None:
        self.adj[u] |= 1 << v
        self.adj[v] |= 1 << u

    def _lowest(self, m: int) -> int:
        return (m & -m).bit_length() - 1

    def extend_greedy(self) -> bool:
        grew = False
        while True:
            tail = self.adj[self.path[-1]] & ~self.on
            if tail:
                w = self._lowest(tail)
                self.path.append(w)
                self.on |= 1 << w
                grew = True
                self.extensions += 1
                continue
            head = self.adj[self.path[0]] & ~self.on
            if head:
                w = self._lowest(head)
                self.path.insert(0, w)
                self.on |= 1 << w
                grew = True
                self.extensions += 1
                continue
            return grew

    def _closure(self, path):
        """Paths reachable by rotations at the free end, fixing path[0] and e.

        Yields paths in BFS order; each new endpoint is visited once.
        """
        seen = {path[-1]}
        queue = deque([path])
        while queue:
            P = queue.popleft()
            yield P
            pos = {v: i for i, v in enumerate(P)}
            end = P[-1]
            L = len(P) - 1
            for u in bits(self.adj[end] & self.on):
                i = pos[u]
                if i >= L - 1:
                    continue
                if _same_edge((P[i], P[i + 1]), self.e):
                    continue
                nxt = P[i + 1]
                if nxt in seen:
                    continue
                seen.add(nxt)
                self.rotations += 1
                queue.append(P[: i + 1] + P[i + 1:][::-1])

    def _cycle_step(self, P) -> bool:
        """P's endpoints are adjacent: close the cycle and try to leave it."""
        if len(P) == self.n:
            self.path = P
            return True
        cyc = P  # cyclic order, closing edge P[-1] P[0]
        m = len(cyc)
        for i, v in enumerate(cyc):
            out = self.adj[v] & ~self.on
            if not out:
                continue
            w = self._lowest(out)
            # break the cycle at an edge at v other than e
            for j in ((i - 1) % m, i):
                p, q = cyc[j], cyc[(j + 1) % m]
                if _same_edge((p, q), self.e):
                    continue
                # new path starts after the broken edge and ends at v, then w
                if j == i:  # broken edge v, cyc[i+1]: walk backwards from cyc[i+1]
                    order = [cyc[(i + 1 + t) % m] for t in range(m)]
                else:  # broken edge cyc[i-1], v: start at v going forward
                    order = [cyc[(i + t) % m] for t in range(m)][::-1]
                assert order[-1] == v
                self.path = order + [w]
                self.on |= 1 << w
                self.extensions += 1
                return True
        return False

    def step(self) -> str:
        """One round: 'ham', 'grew' or 'stuck'."""
        if self.extend_greedy():
            return "grew"
        for flip in (False, True):
            base = self.path[::-1] if flip else self.path
            for P in self._closure(base):
                end = P[-1]
                if self.adj[end] & ~self.on:
                    self.path = P
                    self.extend_greedy()
                    return "grew"
                if self.adj[end] >> P[0] & 1 and len(P) >= 3:
                    if len(P) == self.n and self._is_ham_cycle(P):
                        self.path = P
                        return "ham"
                    if self._cycle_step(P):
                        return "grew"
        return "stuck"

    def _is_ham_cycle(self, P) -> bool:
        m = len(P)
        for i in range(m):
            if _same_edge((P[i], P[(i + 1) % m]), self.e):
                return True
        return False

    def xy_path(self) -> list:
        P = self.path
        m = len(P)
        for i in range(m):
            p, q = P[i], P[(i + 1) % m]
            if _same_edge((p, q), self.e):
                # drop edge p-q: walk from q forwards to p
                order = [P[(i + 1 + t) % m] for t in range(m)]
                if order[0] != self.x:
                    order.reverse()
                return order
        raise AssertionError("cycle does not contain the fixed edge")


def posa_search(G0: UGraph, x: int, y: int, sprinkle: Iterable = (), budget: int | None = None,
                max_rounds: int | None = None) -> PosaOutcome:
    """Hamilton x,y-path in G0 plus a prefix of ``sprinkle``.

    Works in G0 + xy, keeping a longest path through xy, extending and
    rotating; when stuck the next sprinkled edge is added.  At most
    ``budget`` sprinkled edges are read.
    """
    n = G0.n
    if x == y or not (0 <= x < n and 0 <= y < n):
        raise InputError("x and y must be distinct vertices")
    if n == 2:
        return PosaOutcome([x, y] if G0.has_edge(x, y) else None)
    s = _Search(G0, x, y)
    consumed = []
    stream = iter(sprinkle)
    rounds = 0
    max_rounds = max_rounds if max_rounds is not None else 50 * n * n
    while rounds < max_rounds:
        rounds += 1
        state = s.step()
        if state == "ham":
            path = s.xy_path()
            return PosaOutcome(path, consumed, s.rotations, s.extensions)
        if state == "grew":
            continue
        if budget is not None and len(consumed) >= budget:
            break
        nxt = next(stream, None)
        if nxt is None:
            break
        u, v = int(nxt[0]), int(nxt[1])
        if u != v:
            consumed.append((u, v))
            s.add_edge(u, v)
    return PosaOutcome(None, consumed, s.rotations, s.extensions)


def posa_ham_path(G0: UGraph, x: int, y: int, sprinkle: Iterable = (), budget: int | None = None):
    """A Hamilton x,y-path as a vertex list, or None."""
    return posa_search(G0, x, y, sprinkle, budget).path


def hamilton_path_problems(G: UGraph, path, x: int, y: int, extra_edges=()) -> list[str]:
    """Why ``path`` is not a Hamilton x,y-path of G plus ``extra_edges`` (empty if it is)."""
    H = G.with_edges(extra_edges)
    out = []
    if path is None:
        return ["no path"]
    if sorted(path) != list(range(G.n)):
        out.append("path does not visit every vertex exactly once")
    if not path or path[0] != x or path[-1] != y:
        out.append("wrong endpoints")
    for u, v in zip(path, path[1:]):
        if not H.has_edge(u, v):
            out.append(f"missing edge {u}-{v}")
    return out
