"""Random digraph models, the random digraph process and the decoupling chain."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable

import numpy as np

from .errors import InputError
from .graph import Digraph, UGraph

# ---------------------------------------------------------------------------
# helpers


def _row_to_int(row: np.ndarray) -> int:
    return int.from_bytes(np.packbits(row, bitorder="little").tobytes(), "little")


def _check_prob(p: float, name: str = "p") -> None:
    if not (0.0 <= p <= 1.0) or (isinstance(p, float) and math.isnan(p)):
        raise InputError(f"{name} must lie in [0, 1], got {p}")


def _sparse_rows(n: int, p: float, rng, upper: bool = False) -> list[int]:
    """Bitset rows of a random 0/1 matrix with zero diagonal.

    With ``upper`` only entries u < v are drawn.
    """
    rows = [0] * n
    if p <= 0 or n < 2:
        return rows
    if n <= 3000:
        M = rng.random((n, n)) < p
        np.fill_diagonal(M, False)
        if upper:
            M = np.triu(M, 1)
        return [_row_to_int(M[u]) for u in range(n)]
    for u in range(n):
        lo = u + 1 if upper else 0
        pool = n - lo - (0 if upper else 1)
        if pool <= 0:
            continue
        k = int(rng.binomial(pool, p))
        if k == 0:
            continue
        picks = rng.choice(pool, size=k, replace=False)
        acc = 0
        for x in picks:
            v = int(x) + lo
            if not upper and v >= u:
                v += 1
            acc |= 1 << v
        rows[u] = acc
    return rows


def sample_dnp(n: int, p: float, rng) -> Digraph:
    """D(n, p): every directed edge independently with probability p."""
    _check_prob(p)
    return Digraph(n, _sparse_rows(n, p, rng))


def sample_gnp(n: int, p: float, rng) -> UGraph:
    _check_prob(p)
    up = _sparse_rows(n, p, rng, upper=True)
    adj = list(up)
    for u in range(n):
        row = up[u]
        bit = 1 << u
        while row:
            low = row & -row
            adj[low.bit_length() - 1] |= bit
            row ^= low
    return UGraph(n, adj)


def sample_dstar(n: int, q: float, rng) -> Digraph:
    """D*(n, q): each antiparallel pair present together with probability q."""
    _check_prob(q, "q")
    G = sample_gnp(n, q, rng)
    return Digraph(n, G.adj, G.adj)


# ---------------------------------------------------------------------------
# the random digraph process


def edge_index(n: int, u: int, v: int) -> int:
    return u * (n - 1) + (v if v < u else v - 1)


def edge_of_index(n: int, e: int) -> tuple[int, int]:
    u, r = divmod(e, n - 1)
    return u, (r if r < u else r + 1)


class ProcessTrace:
    """A uniformly random ordering of the n(n-1) directed edges.

    The ordering is produced by a Fisher-Yates shuffle that is only carried
    out as far as anyone has asked; draws happen in fixed-size blocks, so the
    ordering does not depend on the access pattern.
    """

    BLOCK = 512

    def __init__(self, n: int, rng=None, order: Iterable[tuple[int, int]] | None = None,
                 checkpoint_stride: int = 4096):
        if n < 2:
            raise InputError("a process needs n >= 2")
        self.n = n
        self.N = n * (n - 1)
        self._stride = max(1, int(checkpoint_stride))
        self._checkpoints: dict[int, tuple[list[int], list[int]]] = {}
        if order is not None:
            idx = [edge_index(n, u, v) for u, v in order]
            if len(idx) != self.N or len(set(idx)) != self.N:
                raise InputError("order must list every directed edge exactly once")
            for u, v in order:
                if u == v or not (0 <= u < n and 0 <= v < n):
                    raise InputError(f"bad edge ({u},{v}) in order")
            self._prefix = idx
            self._rng = None
            self._swaps = {}
        else:
            if rng is None:
                raise InputError("need an rng or an explicit order")
            self._prefix = []
            self._rng = rng
            self._swaps: dict[int, int] = {}

    # -- permutation ------------------------------------------------------
    def _materialize(self, k: int) -> None:
        k = min(k, self.N)
        if len(self._prefix) >= k:
            return
        target = min(self.N, -(-k // self.BLOCK) * self.BLOCK)
        N = self.N
        swaps = self._swaps
        pref = self._prefix
        while len(pref) < target:
            t0 = len(pref)
            t1 = min(t0 + self.BLOCK, N)
            lows = np.arange(t0, t1, dtype=np.int64)
            js = self._rng.integers(lows, N)
            for t, j in zip(range(t0, t1), js.tolist()):
                val = swaps.pop(j, j)
                if j != t:
                    swaps[j] = swaps.pop(t, t)
                else:
                    swaps.pop(t, None)
                pref.append(val)

    @property
    def order(self) -> list[tuple[int, int]]:
        self._materialize(self.N)
        return [edge_of_index(self.n, e) for e in self._prefix]

    def edge(self, i: int) -> tuple[int, int]:
        """The i-th edge added (1-indexed)."""
        if not (1 <= i <= self.N):
            raise InputError(f"edge index {i} outside 1..{self.N}")
        self._materialize(i)
        return edge_of_index(self.n, self._prefix[i - 1])

    def edges(self, start: int, stop: int) -> list[tuple[int, int]]:
        """Edges with 1-indexed positions in (start, stop]."""
        self._materialize(stop)
        n = self.n
        return [edge_of_index(n, e) for e in self._prefix[start:stop]]

    def iter_edges(self, upto: int | None = None):
        upto = self.N if upto is None else upto
        done = 0
        while done < upto:
            nxt = min(upto, done + self.BLOCK)
            for e in self.edges(done, nxt):
                yield e
            done = nxt

    # -- prefixes ---------------------------------------------------------
    def prefix(self, i: int) -> Digraph:
        if not (0 <= i <= self.N):
            raise InputError(f"prefix index {i} outside 0..{self.N}")
        n = self.n
        base = (i // self._stride) * self._stride
        while base > 0 and base not in self._checkpoints:
            base -= self._stride
        if base == 0:
            out, inn = [0] * n, [0] * n
        else:
            o, ii = self._checkpoints[base]
            out, inn = list(o), list(ii)
        pos = base
        for u, v in self.edges(base, i):
            out[u] |= 1 << v
            inn[v] |= 1 << u
            pos += 1
            if pos % self._stride == 0 and pos not in self._checkpoints:
                self._checkpoints[pos] = (list(out), list(inn))
        return Digraph(n, out, inn)

    # -- text format ------------------------------------------------------
    def dumps(self, upto: int | None = None) -> str:
        upto = self.N if upto is None else upto
        lines = [f"{self.n}"]
        lines += [f"{u} {v}" for u, v in self.edges(0, upto)]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ProcessTrace":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise InputError("empty trace")
        try:
            n = int(lines[0].split()[0])
            order = [tuple(int(x) for x in ln.split()[:2]) for ln in lines[1:]]
        except (ValueError, IndexError) as exc:
            raise InputError(f"malformed trace: {exc}") from None
        return cls(n, order=order)


def sample_process(n: int, rng) -> ProcessTrace:
    return ProcessTrace(n, rng)


def prefix(trace: ProcessTrace, i: int) -> Digraph:
    return trace.prefix(i)


# ---------------------------------------------------------------------------
# decoupling chain


def pair_list(n: int) -> list[tuple[int, int]]:
    """Fixed enumeration e_1..e_l of unordered pairs, as (x, y) with x < y."""
    return [(x, y) for x in range(n) for y in range(x + 1, n)]


@dataclass(frozen=True)
class CouplingRandomness:
    n: int
    p: float
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray

    @property
    def ell(self) -> int:
        return self.X.shape[-1]

    @classmethod
    def sample(cls, n: int, p: float, rng, batch: int | None = None) -> "CouplingRandomness":
        _check_prob(p)
        ell = n * (n - 1) // 2
        shape = (ell,) if batch is None else (batch, ell)
        X = rng.random(shape) < p
        Y = rng.random(shape) < p
        Z = rng.random(shape) < p
        return cls(n, p, X, Y, Z)


def chain_edges(R: CouplingRandomness, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Indicators of x_i -> y_i and y_i -> x_i in the j-th chain element."""
    ell = R.ell
    if not (0 <= j <= ell):
        raise InputError(f"j must lie in 0..{ell}")
    dec = np.arange(ell) < j
    fwd = np.where(dec, R.X, R.Z)
    bwd = np.where(dec, R.Y, R.Z)
    return fwd, bwd


def coupling_chain(R: CouplingRandomness, j: int) -> Digraph:
    if R.X.ndim != 1:
        raise InputError("coupling_chain needs a single draw; use chain_edges for batches")
    fwd, bwd = chain_edges(R, j)
    edges = []
    for (x, y), a, b in zip(pair_list(R.n), fwd.tolist(), bwd.tolist()):
        if a:
            edges.append((x, y))
        if b:
            edges.append((y, x))
    return Digraph.from_edges(R.n, edges)


@dataclass
class MonotoneCheck:
    freq_j0: float
    freq_jl: float
    trials: int
    difference: float
    lower_bound: float  # one-sided 99% lower confidence bound on freq_jl - freq_j0


def monotone_family_check(D0: Digraph | None, family_oracle: Callable[[Digraph], bool], p: float,
                          n: int, trials: int, rng) -> MonotoneCheck:
    """Empirical containment frequencies of D0 + chain element at j=0 and j=l."""
    if trials <= 0:
        raise InputError("trials must be positive")
    D0 = Digraph.empty(n) if D0 is None else D0
    ell = n * (n - 1) // 2
    a = np.zeros(trials, dtype=bool)
    b = np.zeros(trials, dtype=bool)
    for t in range(trials):
        R = CouplingRandomness.sample(n, p, rng)
        a[t] = family_oracle(D0.union(coupling_chain(R, 0)))
        b[t] = family_oracle(D0.union(coupling_chain(R, ell)))
    diff = b.astype(float) - a.astype(float)
    sd = diff.std(ddof=1) if trials > 1 else 0.0
    mean = diff.mean()
    return MonotoneCheck(float(a.mean()), float(b.mean()), trials, float(mean),
                         float(mean - 2.326 * sd / math.sqrt(trials)))


def exact_chain_probability(n: int, p, j: int, family_oracle: Callable[[Digraph], bool],
                            D0: Digraph | None = None):
    """P(family contained in D0 + j-th chain element), by enumerating all outcomes.

    Pairs with index <= j contribute four outcomes each, the others two, so
    this is only for very small n.  Exact when ``p`` is a Fraction.
    """
    pairs = pair_list(n)
    ell = len(pairs)
    if not (0 <= j <= ell):
        raise InputError(f"j must lie in 0..{ell}")
    if 2 ** ell * 2 ** j > 1 << 16:
        raise InputError("too many outcomes for exact enumeration")
    D0 = Digraph.empty(n) if D0 is None else D0
    q = 1 - p
    total = Fraction(0) if isinstance(p, Fraction) else 0.0
    # per pair: list of (edges, weight)
    options = []
    for i, (x, y) in enumerate(pairs, start=1):
        if i <= j:
            options.append([((), q * q), (((x, y),), p * q), (((y, x),), q * p),
                            (((x, y), (y, x)), p * p)])
        else:
            options.append([((), q), (((x, y), (y, x)), p)])

    def rec(i, edges, weight):
        nonlocal total
        if weight == 0:
            return
        if i == ell:
            if family_oracle(D0.with_edges(edges)):
                total += weight
            return
        for es, w in options[i]:
            rec(i + 1, edges + list(es), weight * w)

    rec(0, [], Fraction(1) if isinstance(p, Fraction) else 1.0)
    return total
