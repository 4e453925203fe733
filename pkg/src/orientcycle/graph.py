"""Bitset digraphs and graphs on the vertex set {0, ..., n-1}.

Each vertex carries its neighbourhood as a Python int used as a bitset, so
neighbourhood intersections and degree counts into a vertex set are a single
``&`` plus ``int.bit_count``.
"""
from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import InputError

PLUS = "+"
MINUS = "-"


def bits(mask: int) -> Iterator[int]:
    """Yield the indices of set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


def full_mask(n: int) -> int:
    return (1 << n) - 1


def _as_mask(within, n: int) -> int:
    if within is None:
        return full_mask(n)
    if isinstance(within, int):
        return within
    m = mask_of(within)
    if m >> n:
        raise InputError("vertex set reaches outside [0, n)")
    return m


def _check_sign(sign: str) -> str:
    if sign in ("+", "out"):
        return PLUS
    if sign in ("-", "in", "−"):
        return MINUS
    raise InputError(f"unknown sign {sign!r}")


class Digraph:
    """Immutable simple digraph with mirrored in/out bitsets."""

    __slots__ = ("n", "out_adj", "in_adj", "m")

    def __init__(self, n: int, out_adj: Sequence[int], in_adj: Sequence[int] | None = None):
        if n < 0:
            raise InputError("n must be non-negative")
        out_adj = tuple(out_adj)
        if len(out_adj) != n:
            raise InputError("out_adj has wrong length")
        if in_adj is None:
            inn = [0] * n
            for u, row in enumerate(out_adj):
                ub = 1 << u
                for v in bits(row):
                    inn[v] |= ub
            in_adj = inn
        self.n = n
        self.out_adj = out_adj
        self.in_adj = tuple(in_adj)
        self.m = sum(row.bit_count() for row in out_adj)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Digraph":
        out = [0] * n
        inn = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise InputError(f"self-loop at {u}")
            out[u] |= 1 << v
            inn[v] |= 1 << u
        return cls(n, out, inn)

    @classmethod
    def empty(cls, n: int) -> "Digraph":
        return cls(n, [0] * n, [0] * n)

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        full = full_mask(n)
        rows = [full ^ (1 << v) for v in range(n)]
        return cls(n, rows, list(rows))

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.out_adj[u] >> v & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.out_adj):
            for v in bits(row):
                yield u, v

    def adj(self, sign: str) -> tuple[int, ...]:
        return self.out_adj if _check_sign(sign) == PLUS else self.in_adj

    def out_degree(self, v: int) -> int:
        return self.out_adj[v].bit_count()

    def in_degree(self, v: int) -> int:
        return self.in_adj[v].bit_count()

    def union(self, other: "Digraph") -> "Digraph":
        if other.n != self.n:
            raise InputError("union of digraphs on different vertex counts")
        return Digraph(
            self.n,
            [a | b for a, b in zip(self.out_adj, other.out_adj)],
            [a | b for a, b in zip(self.in_adj, other.in_adj)],
        )

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "Digraph":
        out = list(self.out_adj)
        inn = list(self.in_adj)
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at {u}")
            out[u] |= 1 << v
            inn[v] |= 1 << u
        return Digraph(self.n, out, inn)

    def restrict(self, within) -> "Digraph":
        """Keep only edges with both ends in ``within``; numbering unchanged."""
        w = _as_mask(within, self.n)
        out = [row & w if w >> u & 1 else 0 for u, row in enumerate(self.out_adj)]
        inn = [row & w if w >> u & 1 else 0 for u, row in enumerate(self.in_adj)]
        return Digraph(self.n, out, inn)

    def underlying(self) -> "UGraph":
        return UGraph(self.n, [a | b for a, b in zip(self.out_adj, self.in_adj)])

    def mutual(self) -> "UGraph":
        """Graph of pairs joined in both directions."""
        return UGraph(self.n, [a & b for a, b in zip(self.out_adj, self.in_adj)])

    def __eq__(self, other) -> bool:
        return isinstance(other, Digraph) and self.n == other.n and self.out_adj == other.out_adj

    def __hash__(self) -> int:
        return hash((self.n, self.out_adj))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, m={self.m})"


class UGraph:
    """Immutable simple undirected graph."""

    __slots__ = ("n", "adj", "m")

    def __init__(self, n: int, adj: Sequence[int]):
        adj = tuple(adj)
        if len(adj) != n:
            raise InputError("adj has wrong length")
        self.n = n
        self.adj = adj
        total = sum(row.bit_count() for row in adj)
        self.m = total // 2

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "UGraph":
        adj = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InputError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise InputError(f"self-loop at {u}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return cls(n, adj)

    @classmethod
    def empty(cls, n: int) -> "UGraph":
        return cls(n, [0] * n)

    @classmethod
    def complete(cls, n: int) -> "UGraph":
        full = full_mask(n)
        return cls(n, [full ^ (1 << v) for v in range(n)])

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj[u] >> v & 1)

    def edges(self) -> Iterator[tuple[int, int]]:
        for u, row in enumerate(self.adj):
            for v in bits(row >> (u + 1) << (u + 1)):
                yield u, v

    def degree(self, v: int, within=None) -> int:
        if within is None:
            return self.adj[v].bit_count()
        return (self.adj[v] & _as_mask(within, self.n)).bit_count()

    def neighbourhood(self, A: int) -> int:
        """External neighbourhood N(A) of the vertex bitset ``A``."""
        acc = 0
        for v in bits(A):
            acc |= self.adj[v]
        return acc & ~A

    def union(self, other: "UGraph") -> "UGraph":
        if other.n != self.n:
            raise InputError("union of graphs on different vertex counts")
        return UGraph(self.n, [a | b for a, b in zip(self.adj, other.adj)])

    def with_edges(self, edges: Iterable[tuple[int, int]]) -> "UGraph":
        adj = list(self.adj)
        for u, v in edges:
            if u == v:
                raise InputError(f"self-loop at {u}")
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return UGraph(self.n, adj)

    def restrict(self, within) -> "UGraph":
        w = _as_mask(within, self.n)
        return UGraph(self.n, [row & w if w >> u & 1 else 0 for u, row in enumerate(self.adj)])

    def component_of(self, v: int, within=None) -> int:
        w = _as_mask(within, self.n)
        seen = 1 << v
        frontier = seen
        while frontier:
            nxt = 0
            for u in bits(frontier):
                nxt |= self.adj[u]
            nxt &= w & ~seen
            seen |= nxt
            frontier = nxt
        return seen

    def is_connected(self, within=None) -> bool:
        w = _as_mask(within, self.n)
        if w == 0:
            return True
        start = (w & -w).bit_length() - 1
        return self.component_of(start, w) == w

    def __eq__(self, other) -> bool:
        return isinstance(other, UGraph) and self.n == other.n and self.adj == other.adj

    def __hash__(self) -> int:
        return hash((self.n, self.adj))

    def __repr__(self) -> str:
        return f"UGraph(n={self.n}, m={self.m})"


def degree(D: Digraph, v: int, sign: str, within=None) -> int:
    """Number of ``sign``-neighbours of ``v`` inside ``within`` (default: all)."""
    if not (0 <= v < D.n):
        raise InputError(f"vertex {v} out of range for n={D.n}")
    row = D.adj(sign)[v]
    if within is None:
        return row.bit_count()
    return (row & _as_mask(within, D.n)).bit_count()


def biorient(G: UGraph) -> Digraph:
    """Replace each edge by the two opposite arcs."""
    return Digraph(G.n, G.adj, G.adj)


# ---------------------------------------------------------------------------
# expansion


@dataclass
class ExpansionVerdict:
    expander: bool
    mode: str
    witness: frozenset | None = None
    reason: str = ""
    trials: int = 0

    @property
    def certified(self) -> bool:
        return self.expander and self.mode == "exact"


def is_k_expander(
    G: UGraph,
    ratio: float = 10,
    set_frac: float = 1 / 20,
    mode: str = "exact",
    trials: int = 200,
    rng=None,
    cap: int = 20,
    within=None,
) -> ExpansionVerdict:
    """Decide or refute: connected and |N(A)| >= ratio*|A| for all |A| <= set_frac*n.

    ``within`` restricts attention to the induced subgraph on that vertex set;
    its size plays the role of n.
    """
    w = _as_mask(within, G.n)
    verts = list(bits(w))
    size = len(verts)
    adj = [row & w for row in G.adj]
    # Sets of size one are always examined; otherwise the bound is vacuous
    # below n = 1/set_frac.
    limit = max(1, int(set_frac * size + 1e-12)) if size else 0

    if not G.is_connected(w):
        comp = G.component_of(verts[0], w) if verts else 0
        return ExpansionVerdict(False, mode, frozenset(bits(comp)), "disconnected")

    def nbhd(A: int) -> int:
        acc = 0
        for v in bits(A):
            acc |= adj[v]
        return acc & ~A

    if mode == "exact":
        if size > cap:
            raise InputError(f"exact expansion check limited to n <= {cap}, got {size}")
        for k in range(1, limit + 1):
            for combo in itertools.combinations(verts, k):
                A = mask_of(combo)
                if nbhd(A).bit_count() < ratio * k:
                    return ExpansionVerdict(False, mode, frozenset(combo), "expansion")
        return ExpansionVerdict(True, mode)

    if mode != "sampled":
        raise InputError(f"unknown expansion mode {mode!r}")
    import numpy as np

    rng = rng if rng is not None else np.random.default_rng(0)
    if limit >= 1:
        for v in verts:
            if adj[v].bit_count() < ratio:
                return ExpansionVerdict(False, mode, frozenset([v]), "expansion", trials)
    for t in range(trials):
        if limit < 2:
            break
        seed_v = verts[int(rng.integers(size))]
        A = 1 << seed_v
        target = int(rng.integers(2, limit + 1))
        while A.bit_count() < target:
            cand = nbhd(A)
            if not cand:
                break
            best, best_val = None, None
            for u in bits(cand):
                val = nbhd(A | 1 << u).bit_count()
                if best_val is None or val < best_val:
                    best, best_val = u, val
            A |= 1 << best
            if best_val < ratio * A.bit_count():
                return ExpansionVerdict(False, mode, frozenset(bits(A)), "expansion", t + 1)
    return ExpansionVerdict(True, mode, None, "not refuted", trials)


# ---------------------------------------------------------------------------
# embeddings


@dataclass(frozen=True)
class Embedding:
    """Position-to-vertex map witnessing a copy of an oriented cycle."""

    pattern_len: int
    map: tuple[int, ...]
    pins: tuple[tuple[int, int], ...] = field(default=())

    def lines(self) -> str:
        return "".join(f"{i} {v}\n" for i, v in enumerate(self.map))


def _pattern_bits(pattern) -> tuple[bool, ...]:
    b = getattr(pattern, "bits", pattern)
    return tuple(bool(x) for x in b)


def embedding_problems(D: Digraph, pattern, emb: Embedding) -> list[str]:
    """List every reason ``emb`` fails to be a copy of ``pattern`` in ``D``."""
    sigma = _pattern_bits(pattern)
    n = len(sigma)
    out = []
    if emb.pattern_len != n or len(emb.map) != n:
        return [f"length mismatch: pattern {n}, map {len(emb.map)}"]
    if any(not (0 <= v < D.n) for v in emb.map):
        out.append("vertex out of range")
        return out
    if len(set(emb.map)) != n:
        out.append("map not injective")
    for i, fwd in enumerate(sigma):
        a, b = emb.map[i], emb.map[(i + 1) % n]
        if fwd and not D.has_edge(a, b):
            out.append(f"missing edge {a}->{b} at position {i}")
        elif not fwd and not D.has_edge(b, a):
            out.append(f"missing edge {b}->{a} at position {i}")
    for pos, v in emb.pins:
        if emb.map[pos] != v:
            out.append(f"pin {pos}={v} violated")
    return out


def is_valid_embedding(D: Digraph, pattern, emb: Embedding) -> bool:
    return not embedding_problems(D, pattern, emb)


# ---------------------------------------------------------------------------
# edge-list text format


def dumps_edgelist(G) -> str:
    buf = io.StringIO()
    if isinstance(G, UGraph):
        buf.write(f"{G.n} {G.m} u\n")
    else:
        buf.write(f"{G.n} {G.m}\n")
    for u, v in G.edges():
        buf.write(f"{u} {v}\n")
    return buf.getvalue()


def loads_edgelist(text: str):
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InputError("empty edge list")
    head = lines[0].split()
    undirected = "u" in head[2:]
    try:
        n, m = int(head[0]), int(head[1])
        edges = [tuple(int(x) for x in ln.split()[:2]) for ln in lines[1:]]
    except (ValueError, IndexError) as exc:
        raise InputError(f"malformed edge list: {exc}") from None
    if len(edges) != m:
        raise InputError(f"header announces {m} edges, found {len(edges)}")
    G = (UGraph if undirected else Digraph).from_edges(n, edges)
    if G.m != m:
        raise InputError("duplicate edges in edge list")
    return G


def write_edgelist(G, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_edgelist(G))


def read_edgelist(path):
    with open(path, encoding="utf-8") as fh:
        return loads_edgelist(fh.read())
