"""Pseudorandomness checks, the exceptional-set partition, bad sets and path connection."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadSetFailure, ConnectionFailure, InputError, PartitionFailure
from .graph import Digraph, UGraph, _as_mask, bits, full_mask, is_k_expander, mask_of
from .params import PAPER, PipelineParams

SIGNS = ("+", "-")


def _adj(D: Digraph, sign: str):
    return D.out_adj if sign == "+" else D.in_adj


def _count_subsets(k: int, upto: int) -> int:
    return sum(math.comb(k, s) for s in range(1, upto + 1))


# ---------------------------------------------------------------------------
# pseudorandomness report


@dataclass
class CheckResult:
    name: str
    passed: bool
    witness: object = None
    measured: object = None
    mode: str = "exact"


@dataclass
class PseudoReport:
    checks: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def __getitem__(self, key) -> CheckResult:
        return self.checks[key]


def a3_violation(D: Digraph, sign: str, A, B, deg: float, expansion: float, size: float) -> bool:
    """True iff (A, B, sign) violates the expansion condition."""
    A = _as_mask(A, D.n)
    B = _as_mask(B, D.n)
    if A == 0 or A.bit_count() > size:
        return False
    adj = _adj(D, sign)
    if any((adj[v] & B).bit_count() < deg for v in bits(A)):
        return False
    return B.bit_count() < A.bit_count() * expansion


def _a3_best_A(D, sign, B, deg, size):
    adj = _adj(D, sign)
    A = [v for v in range(D.n) if (adj[v] & B).bit_count() >= deg]
    return mask_of(A[: int(size)])


def _a3_exact(D: Digraph, deg, expansion, size):
    n = D.n
    for sign in SIGNS:
        for Bm in range(1, 1 << n):
            A = _a3_best_A(D, sign, Bm, deg, size)
            if A and Bm.bit_count() < A.bit_count() * expansion:
                return sign, A, Bm
    return None


def _a3_sampled(D: Digraph, deg, expansion, size, trials, rng):
    n = D.n
    need = math.ceil(deg - 1e-12)
    if need <= 0:
        return None
    for t in range(trials):
        sign = SIGNS[t % 2]
        adj = _adj(D, sign)
        start = int(rng.integers(n))
        if adj[start].bit_count() < need:
            continue
        nb = list(bits(adj[start]))
        rng.shuffle(nb)
        B = mask_of(nb[:need])
        A = 1 << start
        while A.bit_count() < size:
            # the vertex needing fewest new members of B
            best, best_cost = None, None
            cand = 0
            for b in bits(B):
                cand |= _adj(D, "-" if sign == "+" else "+")[b]
            cand &= ~A
            for u in bits(cand):
                have = (adj[u] & B).bit_count()
                if adj[u].bit_count() < need:
                    continue
                cost = max(0, need - have)
                if best_cost is None or cost < best_cost:
                    best, best_cost = u, cost
                    if cost == 0:
                        break
            if best is None:
                break
            if best_cost:
                extra = list(bits(adj[best] & ~B))[:best_cost]
                B |= mask_of(extra)
            A |= 1 << best
            full_A = _a3_best_A(D, sign, B, deg, size)
            if full_A and B.bit_count() < full_A.bit_count() * expansion:
                return sign, full_A, B
    return None


def check_pseudorandom(D: Digraph, X=(), params: PipelineParams = PAPER, rng=None,
                       mode: str = "auto") -> PseudoReport:
    n = D.n
    Xm = _as_mask(X, n)
    rest = full_mask(n) & ~Xm
    report = PseudoReport(params=params.resolved(n))
    maxdeg = params.max_degree(n)
    worst = None
    for sign in SIGNS:
        adj = _adj(D, sign)
        for v in range(n):
            d = adj[v].bit_count()
            if worst is None or d > worst[2]:
                worst = (v, sign, d)
    report.checks["A1"] = CheckResult("A1", worst is None or worst[2] <= maxdeg,
                                      worst if worst and worst[2] > maxdeg else None,
                                      worst[2] if worst else 0)
    mindeg = params.min_degree(n)
    low = None
    for sign in SIGNS:
        adj = _adj(D, sign)
        for v in range(n):
            d = (adj[v] & rest).bit_count()
            if low is None or d < low[2]:
                low = (v, sign, d)
    ok2 = low is None or low[2] >= mindeg
    report.checks["A2"] = CheckResult("A2", ok2, None if ok2 else low, low[2] if low else 0)
    deg, exp_, size = params.a3_degree(n), params.a3_expansion(n), params.a3_size(n)
    if mode == "auto":
        mode = "exact" if n <= params.a3_exact_cap else "sampled"
    if mode == "exact":
        if n > params.a3_exact_cap:
            raise InputError(f"exact A3 check limited to n <= {params.a3_exact_cap}")
        found = _a3_exact(D, deg, exp_, size)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        found = _a3_sampled(D, deg, exp_, size, params.a3_trials, rng)
    if found:
        sign, A, B = found
        wit = (sign, frozenset(bits(A)), frozenset(bits(B)))
        report.checks["A3"] = CheckResult("A3", False, wit, None, mode)
    else:
        report.checks["A3"] = CheckResult("A3", True, None, None, mode)
    return report


# ---------------------------------------------------------------------------
# partition of the non-exceptional vertices


@dataclass(frozen=True)
class Partition:
    V0: frozenset
    V1: frozenset
    V2: frozenset
    iterations: int = 0

    def __iter__(self):
        return iter((self.V0, self.V1, self.V2))


def partition_violations(D: Digraph, V1, V2, threshold: float) -> list[tuple[int, str, int]]:
    m1, m2 = _as_mask(V1, D.n), _as_mask(V2, D.n)
    out = []
    for sign in SIGNS:
        adj = _adj(D, sign)
        for v in range(D.n):
            for part in (m1, m2):
                if (adj[v] & part).bit_count() < threshold:
                    out.append((v, sign, (adj[v] & part).bit_count()))
    return out


def partition_exceptional(D: Digraph, X=(), params: PipelineParams = PAPER, rng=None) -> Partition:
    """Split V(D)-X into V0, V1, V2 with |V1| = |V2| = floor(n/4) and every vertex
    having at least the partition threshold of in- and out-neighbours in V1 and V2.

    Resampling: draw each vertex's part independently (1-2p, p, p), and while some
    vertex's degree condition fails, redraw the parts of its neighbours.
    """
    n = D.n
    rng = rng if rng is not None else np.random.default_rng(0)
    Xm = _as_mask(X, n)
    free = [v for v in range(n) if not Xm >> v & 1]
    target = n // 4
    thr = params.partition_degree(n)
    need = math.ceil(thr - 1e-12)
    p = params.partition_p
    if len(free) < 2 * target:
        raise PartitionFailure("too few non-exceptional vertices", worst=None)
    # events whose variables cannot satisfy them at all
    for sign in SIGNS:
        adj = _adj(D, sign)
        for v in range(n):
            avail = (adj[v] & ~Xm).bit_count()
            if avail < 2 * need:
                raise PartitionFailure(f"vertex {v} has only {avail} {sign}-neighbours outside X",
                                       worst=(v, sign, avail))
    out_l = [list(bits(D.out_adj[v] & ~Xm)) for v in range(n)]
    in_l = [list(bits(D.in_adj[v] & ~Xm)) for v in range(n)]
    # counts of every vertex move when a free neighbour changes part, X included
    in_all = [list(bits(D.in_adj[v])) for v in range(n)]
    out_all = [list(bits(D.out_adj[v])) for v in range(n)]
    part = np.zeros(n, dtype=np.int8)
    # cnt[sign][i][v]: sign-neighbours of v in part i (i = 1, 2)
    cnt = np.zeros((2, 3, n), dtype=np.int64)

    def draw(vs):
        return rng.choice(3, size=len(vs), p=[1 - 2 * p, p, p]).astype(np.int8)

    dense = n <= 4000
    if dense:
        # row u marks the in- (resp. out-) neighbours of u
        M_in = np.zeros((n, n), dtype=np.int64)
        M_out = np.zeros((n, n), dtype=np.int64)
        for u in range(n):
            M_in[u, in_all[u]] = 1
            M_out[u, out_all[u]] = 1

    def set_parts(vs, new):
        vs = np.asarray(vs, dtype=np.int64)
        old = part[vs].astype(np.int64)
        new = np.asarray(new, dtype=np.int64)
        moved = old != new
        if not moved.any():
            return
        vs, old, new = vs[moved], old[moved], new[moved]
        part[vs] = new
        if dense:
            for i in range(3):
                gain, loss = vs[new == i], vs[old == i]
                # u is an out-neighbour of each in-neighbour w of u
                cnt[0, i] += M_in[gain].sum(axis=0) - M_in[loss].sum(axis=0)
                cnt[1, i] += M_out[gain].sum(axis=0) - M_out[loss].sum(axis=0)
            return
        for u, po, pn in zip(vs.tolist(), old.tolist(), new.tolist()):
            for w in in_all[u]:
                cnt[0, po, w] -= 1
                cnt[0, pn, w] += 1
            for w in out_all[u]:
                cnt[1, po, w] -= 1
                cnt[1, pn, w] += 1

    for v in free:
        part[v] = 0
    for v in range(n):
        cnt[0, 0, v] = len(out_l[v])
        cnt[1, 0, v] = len(in_l[v])
    set_parts(free, draw(free))

    budget = params.partition_budget(n)
    iters = 0
    while True:
        bad = np.nonzero((cnt[:, 1:, :] < need).any(axis=(0, 1)))[0]
        sizes = [int((part[free] == i).sum()) for i in (1, 2)]
        if bad.size == 0 and max(sizes) <= target:
            break
        if iters >= budget:
            scores = cnt[:, 1:, :].min(axis=(0, 1))
            v = int(np.argmin(scores))
            raise PartitionFailure(f"resampling budget of {budget} exhausted",
                                   worst=(v, int(scores[v])), iterations=iters)
        iters += 1
        if bad.size:
            v = int(bad[0])
            vs = sorted(set(out_l[v]) | set(in_l[v]))
        else:
            vs = free
        set_parts(vs, draw(vs))
    # pad V1 and V2 to exactly floor(n/4) from V0
    V1 = [v for v in free if part[v] == 1]
    V2 = [v for v in free if part[v] == 2]
    pool = [v for v in free if part[v] == 0]
    order = rng.permutation(len(pool))
    pool = [pool[i] for i in order]
    while len(V1) < target:
        V1.append(pool.pop())
    while len(V2) < target:
        V2.append(pool.pop())
    res = Partition(frozenset(pool), frozenset(V1), frozenset(V2), iters)
    assert not partition_violations(D, res.V1, res.V2, thr)
    return res


# ---------------------------------------------------------------------------
# bad sets


def _external(G: UGraph, U: int) -> int:
    acc = 0
    for u in bits(U):
        acc |= G.adj[u]
    return acc & ~U


@dataclass
class Verification:
    ok: bool
    witness: frozenset | None = None
    mode: str = "exact"


def verify_bad_set(G: UGraph, V0, B, d: float, m: int, budget: int = 200_000, rng=None,
                   trials: int = 200) -> Verification:
    """Check |N(U, V0-B)| >= d|U| for all U outside B with |U| <= 2m."""
    n = G.n
    V0m, Bm = _as_mask(V0, n), _as_mask(B, n)
    target = V0m & ~Bm
    outside = full_mask(n) & ~Bm
    umax = 2 * m
    deg = {u: (G.adj[u] & target).bit_count() for u in bits(outside)}
    # a violating U consists only of vertices whose own degree is small
    weak = [u for u, k in deg.items() if k - (umax - 1) < d * umax]
    weak.sort(key=lambda u: deg[u])
    if _count_subsets(len(weak), umax) <= budget:
        for s in range(1, umax + 1):
            for combo in itertools.combinations(weak, s):
                U = mask_of(combo)
                if (_external(G, U) & target).bit_count() < d * s:
                    return Verification(False, frozenset(combo), "exact")
        return Verification(True, None, "exact")
    rng = rng if rng is not None else np.random.default_rng(0)
    for u in weak:
        if deg[u] < d:
            return Verification(False, frozenset([u]), "sampled")
    for _ in range(trials):
        U = 1 << weak[int(rng.integers(len(weak)))]
        while U.bit_count() < umax:
            cand = _external(G, U) & outside
            best, val = None, None
            for w in bits(cand):
                if w not in deg or deg[w] - umax >= d * umax:
                    continue
                k = (_external(G, U | 1 << w) & target).bit_count()
                if val is None or k < val:
                    best, val = w, k
            if best is None:
                break
            U |= 1 << best
            if val < d * U.bit_count():
                return Verification(False, frozenset(bits(U)), "sampled")
    return Verification(True, None, "sampled")


def find_bad_set(G: UGraph, V0, params: PipelineParams = PAPER, rng=None, avoid=()) -> frozenset:
    """A set B outside of which small sets expand into V0 - B.

    Peel vertices with few neighbours in V0 - B, then absorb any small set
    the verifier finds that fails to expand, and repeat.  ``avoid`` lists
    vertices that should not be chosen for the arbitrary singleton.
    """
    n = G.n
    V0m = _as_mask(V0, n)
    if V0m.bit_count() < n / 4 - 1e-9:
        raise InputError("V0 must contain at least n/4 vertices")
    d = params.d_value(n)
    m = params.m_value(n)
    cap = params.bad_set_cap(n)
    peel = params.bad_peel_factor * d
    B = 0
    for _round in range(50):
        changed = True
        while changed:
            changed = False
            target = V0m & ~B
            for v in range(n):
                if B >> v & 1:
                    continue
                if ((G.adj[v] & target) & ~(1 << v)).bit_count() < peel:
                    B |= 1 << v
                    changed = True
            if B.bit_count() > cap:
                raise BadSetFailure(f"bad set exceeds cap {cap}", size=B.bit_count(), cap=cap)
        ver = verify_bad_set(G, V0m, B, d, m, params.exact_subset_budget, rng)
        if ver.ok:
            break
        B |= mask_of(ver.witness)
        if B.bit_count() > cap:
            raise BadSetFailure(f"bad set exceeds cap {cap}", size=B.bit_count(), cap=cap)
    else:
        raise BadSetFailure("verification kept refuting the bad set", size=B.bit_count())
    if B == 0:
        avoid_m = _as_mask(avoid, n)
        choices = [v for v in range(n) if not (V0m | avoid_m) >> v & 1] or \
                  [v for v in range(n) if not avoid_m >> v & 1] or [0]
        B = 1 << choices[0]
    return frozenset(bits(B))


# ---------------------------------------------------------------------------
# extendability


@dataclass
class Subgraph:
    """A subgraph S of a graph on [n]: a vertex set plus an edge set."""

    n: int
    vertices: int = 0
    adj: list = None

    def __post_init__(self):
        if self.adj is None:
            self.adj = [0] * self.n

    @classmethod
    def edgeless(cls, n: int, vertices) -> "Subgraph":
        return cls(n, _as_mask(vertices, n))

    def copy(self) -> "Subgraph":
        return Subgraph(self.n, self.vertices, list(self.adj))

    def degree(self, v: int) -> int:
        return self.adj[v].bit_count()

    def max_degree(self) -> int:
        return max((r.bit_count() for r in self.adj), default=0)

    def add_path(self, path) -> None:
        for v in path:
            self.vertices |= 1 << v
        for a, b in zip(path, path[1:]):
            self.adj[a] |= 1 << b
            self.adj[b] |= 1 << a

    def __len__(self) -> int:
        return self.vertices.bit_count()


def _ext_slack_terms(G: UGraph, S: Subgraph, d: float):
    VS = S.vertices
    a = [(G.adj[u] & ~VS).bit_count() for u in range(G.n)]
    c = [(d - 1) - ((S.degree(u) - 1) if VS >> u & 1 else 0) for u in range(G.n)]
    return a, c


def extendable_violation(G: UGraph, S: Subgraph, d: float, U) -> bool:
    U = _as_mask(U, G.n)
    VS = S.vertices
    acc = 0
    for u in bits(U):
        acc |= G.adj[u]
    lhs = (acc & ~VS).bit_count()
    rhs = (d - 1) * U.bit_count() - sum(S.degree(x) - 1 for x in bits(U & VS))
    return lhs < rhs


def check_extendable(G: UGraph, S: Subgraph, d: float, m: int, mode: str = "auto",
                     budget: int = 200_000, rng=None, trials: int = 200, within=None) -> Verification:
    """Is S (d, m)-extendable in G?  ``within`` restricts G to a vertex subset."""
    if S.max_degree() > d:
        raise InputError(f"subgraph has maximum degree {S.max_degree()} > d = {d}")
    n = G.n
    if within is not None:
        G = G.restrict(within)
    verts = list(range(n)) if within is None else list(bits(_as_mask(within, n)))
    a, c = _ext_slack_terms(G, S, d)
    umax = min(2 * m, len(verts))
    cmax = max((c[u] for u in verts), default=0)
    # |N'(U) - V(S)| >= max over U of a(u), so a violating U only uses weak vertices
    weak = [u for u in verts if a[u] < c[u] + (umax - 1) * max(cmax, 0)]
    weak.sort(key=lambda u: a[u] - c[u])
    for u in weak:
        if a[u] < c[u]:
            return Verification(False, frozenset([u]), "exact" if mode != "sampled" else "sampled")
    exact_ok = _count_subsets(len(weak), umax) <= budget
    if mode == "exact" and not exact_ok:
        raise InputError("exact extendability check over budget")
    if mode in ("exact", "auto") and exact_ok:
        for s in range(2, umax + 1):
            for combo in itertools.combinations(weak, s):
                if extendable_violation(G, S, d, combo):
                    return Verification(False, frozenset(combo), "exact")
        return Verification(True, None, "exact")
    rng = rng if rng is not None else np.random.default_rng(0)
    VS = S.vertices
    for _ in range(trials):
        if not weak:
            break
        U = [weak[int(rng.integers(len(weak)))]]
        while len(U) < umax:
            best, val = None, None
            for w in weak[:64]:
                if w in U:
                    continue
                acc = 0
                for u in U + [w]:
                    acc |= G.adj[u]
                slack = (acc & ~VS).bit_count() - sum(c[u] for u in U + [w])
                if val is None or slack < val:
                    best, val = w, slack
            if best is None:
                break
            U.append(best)
            if val < 0:
                return Verification(False, frozenset(U), "sampled")
    return Verification(True, None, "sampled")


# ---------------------------------------------------------------------------
# connecting paths


def connect_depth(d: float, m: int) -> int:
    return max(1, math.ceil(math.log(2 * m) / math.log(d - 1))) if m >= 1 and 2 * m > 1 else 1


def _grow_tree(G: UGraph, root: int, depth: int, usable: int, branching: int, rng):
    """BFS tree from root of the given depth through ``usable`` vertices.

    Returns (parent map, last layer) or None if the tree dies out.
    """
    parent = {root: None}
    layer = [root]
    used = 1 << root
    for _ in range(depth):
        nxt = []
        for v in layer:
            cand = list(bits(G.adj[v] & usable & ~used))
            if not cand:
                continue
            if len(cand) > branching:
                idx = rng.choice(len(cand), size=branching, replace=False)
                cand = [cand[i] for i in sorted(idx)]
            for w in cand:
                parent[w] = v
                used |= 1 << w
                nxt.append(w)
        if not nxt:
            return None
        layer = nxt
    return parent, layer, used


def _tree_path(parent, leaf):
    out = [leaf]
    while parent[out[-1]] is not None:
        out.append(parent[out[-1]])
    return out  # leaf ... root


def _walk(G: UGraph, start: int, length: int, usable: int, rng):
    path = [start]
    used = 1 << start
    cur = start
    for _ in range(length):
        cand = list(bits(G.adj[cur] & usable & ~used))
        if not cand:
            return None
        scores = [(G.adj[w] & usable & ~used).bit_count() for w in cand]
        top = max(scores)
        best = [w for w, s in zip(cand, scores) if s >= top - 1]
        cur = best[int(rng.integers(len(best)))]
        used |= 1 << cur
        path.append(cur)
    return path, used


def extend_path(G: UGraph, S: Subgraph, a: int, b: int, length: int, d: float, m: int,
                rng=None, allowed=None, attempts: int = 60, verify: str = "auto",
                budget: int = 200_000, within=None) -> list[int]:
    """An a,b-path with exactly ``length`` edges, fresh interior, keeping S extendable.

    ``allowed`` limits the interior vertices; ``within`` is the host vertex set.
    """
    n = G.n
    if within is not None:
        G = G.restrict(within)
    rng = rng if rng is not None else np.random.default_rng(0)
    k = connect_depth(d, m)
    if length < 2 * k + 1:
        raise InputError(f"length {length} below the minimum {2 * k + 1}")
    if a == b or not (S.vertices >> a & 1 and S.vertices >> b & 1):
        raise InputError("endpoints must be distinct vertices of S")
    if S.degree(a) > d / 2 or S.degree(b) > d / 2:
        raise InputError("endpoints have too large degree in S")
    usable = (full_mask(n) if allowed is None else _as_mask(allowed, n)) & ~S.vertices
    if usable.bit_count() < length - 1:
        raise InputError("not enough fresh vertices for a path of this length")
    # avoid fresh vertices whose use would leave a neighbour without slack
    av, cv = _ext_slack_terms(G, S, d)
    host = full_mask(n) if within is None else _as_mask(within, n)
    tight = mask_of(u for u in bits(host) if av[u] - cv[u] < 1 and u not in (a, b))
    blocked = 0
    for u in bits(tight):
        blocked |= G.adj[u]
    full_usable = usable
    last_stage = "join"
    for attempt in range(attempts):
        usable = full_usable & ~blocked
        t = k + attempt % max(1, (length - 1) // 2 - k + 1)
        t = min(t, (length - 1) // 2)
        head_len = length - 1 - 2 * t
        branching = max(2, int(d - 1)) * (1 + attempt // 20)
        if head_len > 0:
            walked = _walk(G, a, head_len - 0, usable | 1 << a, rng)
            if walked is None:
                last_stage = "walk"
                continue
            head, head_used = walked
            a_root = head[-1]
            avail = usable & ~head_used
        else:
            head, a_root, avail = [a], a, usable
        ta = _grow_tree(G, a_root, t, avail, branching, rng)
        if ta is None:
            last_stage = "tree"
            continue
        pa, la, used_a = ta
        tb = _grow_tree(G, b, t, avail & ~used_a, branching, rng)
        if tb is None:
            last_stage = "tree"
            continue
        pb, lb, _ = tb
        lb_mask = mask_of(lb)
        join = None
        for x in la:
            hit = G.adj[x] & lb_mask
            if hit:
                join = (x, (hit & -hit).bit_length() - 1)
                break
        if join is None:
            last_stage = "join"
            continue
        x, y = join
        left = list(reversed(_tree_path(pa, x)))  # a_root ... x
        right = _tree_path(pb, y)  # y ... b
        path = head[:-1] + left + right
        assert len(path) == length + 1 and path[0] == a and path[-1] == b
        assert len(set(path)) == len(path)
        S2 = S.copy()
        S2.add_path(path)
        if S2.max_degree() <= d:
            ver = check_extendable(G, S2, d, m, mode=verify, budget=budget, rng=rng,
                                   within=within)
            if ver.ok:
                return path
            # keep the witness's fresh neighbours out of later attempts
            for u in ver.witness:
                blocked |= G.adj[u] & full_usable
        last_stage = "verify"
    raise ConnectionFailure(f"no a,b-path of length {length} found", stage_detail=last_stage,
                            a=a, b=b)


@dataclass
class ConnectResult:
    paths: list
    residual: frozenset
    expansion: object = None


def connect_pairs(G: UGraph, V0, B, pairs, lengths, params: PipelineParams = PAPER, rng=None,
                  check_expansion: bool = True) -> ConnectResult:
    """Internally disjoint x_i,y_i-paths of the given lengths through V0 - B."""
    n = G.n
    rng = rng if rng is not None else np.random.default_rng(0)
    V0m, Bm = _as_mask(V0, n), _as_mask(B, n)
    pairs = [tuple(p) for p in pairs]
    lengths = [int(x) for x in lengths]
    if len(pairs) != len(lengths):
        raise InputError("one length per pair")
    lo = params.min_connect_length(n)
    if any(L < lo for L in lengths):
        raise InputError(f"every length must be at least {lo}")
    if sum(lengths) > params.connect_budget_frac * n:
        raise InputError(f"total length {sum(lengths)} exceeds {params.connect_budget_frac * n:.1f}")
    ends = [v for p in pairs for v in p]
    if len(set(ends)) != len(ends):
        raise InputError("pair endpoints must be distinct")
    if any((V0m | Bm) >> v & 1 for v in ends):
        raise InputError("pair endpoints must lie outside V0 and B")
    d = params.d_value(n)
    m = params.m_value(n)
    host = full_mask(n) & ~Bm
    S = Subgraph.edgeless(n, full_mask(n) & ~(V0m | Bm))
    allowed = V0m & ~Bm
    paths = []
    for i, ((x, y), L) in enumerate(zip(pairs, lengths)):
        try:
            path = extend_path(G, S, x, y, L, d, m, rng=rng, allowed=allowed,
                               budget=params.exact_subset_budget, within=host)
        except ConnectionFailure as exc:
            raise ConnectionFailure(f"pair {i}: {exc}", pair=i, **exc.diagnostics) from None
        S.add_path(path)
        paths.append(path)
    used = 0
    for path in paths:
        used |= mask_of(path[1:-1])
    residual = V0m & ~Bm & ~used
    verdict = None
    if check_expansion:
        A = full_mask(n) & ~Bm & ~used
        mode = "exact" if A.bit_count() <= params.expander_exact_cap else "sampled"
        verdict = is_k_expander(G, params.expander_ratio, params.expander_frac, mode,
                                trials=params.expander_trials, rng=rng,
                                cap=params.expander_exact_cap, within=A)
    return ConnectResult(paths, frozenset(bits(residual)), verdict)
