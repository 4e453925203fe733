"""Exact containment of oriented spanning cycles.

``find_embedding`` is a Held-Karp style DP over (visited set, last vertex)
where the number of visited vertices fixes the pattern position, so the
orientation of the next edge is known.  The reachable last vertices of each
visited set are stored as one bitset word, and the DP is vectorised layer by
layer with numpy.

``contained_codes`` decides every pattern at once: the DP state additionally
carries the orientation prefix read so far, and prefixes are shared, giving
about 3^(n-1) states in total.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InputError
from .graph import Digraph, Embedding
from .patterns import OrientationPattern, canonical_classes, canonical_string

EMBED_CAP = 22
ALL_PATTERNS_CAP = 14


def _layer_masks(n: int, start: int):
    """Masks containing ``start``, grouped by popcount."""
    rest = np.arange(1 << (n - 1), dtype=np.int64)
    # insert a set bit at position ``start``
    low = rest & ((1 << start) - 1)
    high = (rest >> start) << (start + 1)
    masks = high | low | (1 << start)
    pc = _popcount(masks)
    order = np.argsort(pc, kind="stable")
    masks = masks[order]
    pc = pc[order]
    bounds = np.searchsorted(pc, np.arange(n + 2))
    return [masks[bounds[k]:bounds[k + 1]] for k in range(n + 1)]


def _popcount(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    c = np.zeros(a.shape, dtype=np.int64)
    while True:
        nz = a != 0
        if not nz.any():
            return c
        c += nz
        a = a & (a - np.uint64(1))


_LAYER_CACHE: dict = {}


def _layers(n: int, start: int):
    key = (n, start)
    if key not in _LAYER_CACHE:
        if len(_LAYER_CACHE) > 8:
            _LAYER_CACHE.clear()
        _LAYER_CACHE[key] = _layer_masks(n, start)
    return _LAYER_CACHE[key]


def _anchored_dp(D: Digraph, sigma, start: int, pins: dict[int, int]):
    """Spanning cycle with position 0 at ``start`` following ``sigma``.

    Returns the vertex sequence by position, or None.
    """
    n = D.n
    out_adj = np.array(D.out_adj, dtype=np.int64)
    in_adj = np.array(D.in_adj, dtype=np.int64)
    layers = _layers(n, start)
    reach = np.zeros(1 << n, dtype=np.int64)
    reach[1 << start] = 1 << start
    pinned_vertices = set(pins.values())
    for k in range(2, n + 1):
        pos = k - 1
        fwd = sigma[pos - 1]
        nb = in_adj if fwd else out_adj
        layer = layers[k]
        if pos in pins:
            cands = [pins[pos]]
        else:
            cands = [w for w in range(n) if w != start and w not in pinned_vertices]
        any_alive = False
        for w in cands:
            sel = layer[(layer >> w) & 1 == 1]
            if sel.size == 0:
                continue
            prev = sel ^ (1 << w)
            hit = (reach[prev] & nb[w]) != 0
            if hit.any():
                any_alive = True
                reach[sel[hit]] |= 1 << w
        if not any_alive:
            return None
    full = (1 << n) - 1
    closing = D.in_adj[start] if sigma[n - 1] else D.out_adj[start]
    cand = int(reach[full]) & closing
    if not cand:
        return None
    cur = (cand & -cand).bit_length() - 1
    seq = [cur]
    mask = full
    for k in range(n, 1, -1):
        pmask = mask ^ (1 << cur)
        fwd = sigma[k - 2]
        nbrow = D.in_adj[cur] if fwd else D.out_adj[cur]
        options = int(reach[pmask]) & nbrow
        u = (options & -options).bit_length() - 1
        seq.append(u)
        mask, cur = pmask, u
    seq.reverse()
    assert seq[0] == start
    return seq


def find_embedding(D: Digraph, C: OrientationPattern, pins=None, cap: int = EMBED_CAP):
    """Return an Embedding of ``C`` into ``D`` honouring ``pins``, or None.

    Exhaustive: None means no copy exists.
    """
    n = C.n
    if D.n != n:
        raise InputError(f"digraph has {D.n} vertices, pattern has {n}")
    if n > cap:
        raise InputError(f"exact search limited to n <= {cap}")
    pins = dict(pins or {})
    if pins:
        if len(set(pins.values())) != len(pins):
            raise InputError("pins map two positions to the same vertex")
        for pos, v in pins.items():
            if not (0 <= pos < n and 0 <= v < n):
                raise InputError(f"pin {pos}={v} out of range")
    pin_tuple = tuple(sorted(pins.items()))
    if pins:
        p0 = min(pins)
        anchors = [(p0, pins[p0])]
    else:
        anchors = [(r, 0) for r in range(n)]
    for r, s in anchors:
        rot = C.rotate(r).bits
        local = {(p - r) % n: v for p, v in pins.items()}
        seq = _anchored_dp(D, rot, s, local)
        if seq is not None:
            mapping = [0] * n
            for t, v in enumerate(seq):
                mapping[(t + r) % n] = v
            return Embedding(n, tuple(mapping), pin_tuple)
    return None


def brute_force_contains(D: Digraph, C: OrientationPattern) -> bool:
    """Try every vertex ordering.  Only for tiny n."""
    n = C.n
    sigma = C.bits
    adj = [[D.has_edge(u, v) for v in range(n)] for u in range(n)]
    for perm in itertools.permutations(range(n)):
        ok = True
        for i in range(n):
            a, b = perm[i], perm[(i + 1) % n]
            if not (adj[a][b] if sigma[i] else adj[b][a]):
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# all patterns at once


def contained_codes(D: Digraph, cap: int = ALL_PATTERNS_CAP) -> np.ndarray:
    """Boolean array F over pattern codes: F[c] iff D has a spanning cycle
    through vertex 0 reading pattern ``c`` when started at vertex 0.

    A pattern is contained in D iff some rotation of its code is in F.
    """
    n = D.n
    if n > cap:
        raise InputError(f"all-patterns search limited to n <= {cap}")
    if n < 3:
        raise InputError("need n >= 3")
    out_adj = np.array(D.out_adj, dtype=np.int64)
    in_adj = np.array(D.in_adj, dtype=np.int64)
    layers = _layers(n, 0)
    idx = np.full(1 << n, -1, dtype=np.int64)
    for k in range(1, n + 1):
        idx[layers[k]] = np.arange(layers[k].size)
    reach = np.ones((1, 1), dtype=np.int64)  # layer 1: mask {0}, last vertex 0
    for k in range(1, n):
        nxt_layer = layers[k + 1]
        rows = reach.shape[0]
        new = np.zeros((2 * rows, nxt_layer.size), dtype=np.int64)
        for w in range(1, n):
            sel_mask = (nxt_layer >> w) & 1 == 1
            T = nxt_layer[sel_mask]
            if T.size == 0:
                continue
            ti = idx[T]
            R = reach[:, idx[T ^ (1 << w)]]
            back = (R & out_adj[w]) != 0
            fwd = (R & in_adj[w]) != 0
            new[:rows, ti] |= back.astype(np.int64) << w
            new[rows:, ti] |= fwd.astype(np.int64) << w
        reach = new
        if not reach.any():
            return np.zeros(1 << n, dtype=bool)
    last = reach[:, 0]
    rows = last.shape[0]
    F = np.zeros(1 << n, dtype=bool)
    F[:rows] = (last & out_adj[0]) != 0
    F[rows:] = (last & in_adj[0]) != 0
    return F


def _rotation_codes(C: OrientationPattern) -> list[int]:
    n = C.n
    c = C.code
    full = (1 << n) - 1
    return [((c >> r) | (c << (n - r))) & full for r in range(n)]


def pattern_in_codes(F: np.ndarray, C: OrientationPattern) -> bool:
    return bool(F[_rotation_codes(C)].any())


@dataclass
class ContainmentVerdict:
    all_contained: bool
    missing: list = field(default_factory=list)
    checked: int = 0

    @property
    def first_missing(self):
        return self.missing[0] if self.missing else None


def contains_all_patterns(D: Digraph, n: int | None = None, exceptions=(), cap: int = ALL_PATTERNS_CAP,
                          classes=None) -> ContainmentVerdict:
    """Check every canonical pattern class outside ``exceptions``."""
    n = D.n if n is None else n
    if n != D.n:
        raise InputError("pattern length must equal the vertex count")
    if n > cap:
        raise InputError(f"all-patterns search limited to n <= {cap}")
    skip = {canonical_string(C) for C in exceptions}
    classes = canonical_classes(n) if classes is None else classes
    F = contained_codes(D, cap=cap)
    missing = []
    checked = 0
    for C in classes:
        if str(C) in skip:
            continue
        checked += 1
        if not pattern_in_codes(F, C):
            missing.append(C)
    return ContainmentVerdict(not missing, missing, checked)


# ---------------------------------------------------------------------------
# exact probabilities at tiny n


def _all_pairs(n):
    return [(u, v) for u in range(n) for v in range(n) if u != v]


def exact_containment_probability(n: int, p, C: OrientationPattern):
    """P(C is contained in D(n, p)), summing over all 2^(n(n-1)) digraphs.

    Exact when ``p`` is a Fraction.
    """
    if n > 4:
        raise InputError("exact enumeration limited to n <= 4")
    if C.n != n:
        raise InputError("pattern length must equal n")
    pairs = _all_pairs(n)
    N = len(pairs)
    counts = [0] * (N + 1)
    for code in range(1 << N):
        D = Digraph.from_edges(n, (pairs[i] for i in range(N) if code >> i & 1))
        if brute_force_contains(D, C):
            counts[D.m] += 1
    q = 1 - p
    total = Fraction(0) if isinstance(p, Fraction) else 0.0
    for m, c in enumerate(counts):
        if c:
            total += c * p**m * q ** (N - m)
    return total
