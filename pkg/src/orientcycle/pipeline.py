"""Embedding an arbitrary oriented spanning cycle with pinned vertices.

``embed_cycle`` runs the four-step construction on a pseudorandom host plus
two sprinkled streams of antiparallel pairs:

A. split off V0 and find a small bad set B in the first stream;
B. cover X u B by short paths of the host that follow slices of the pattern;
C. join consecutive cover paths through V0 - B in the first stream;
D. close the cycle with a Hamilton path of the residual graph, sprinkling
   the second stream into a rotation-extension search.

``process_embed`` adapts a prefix of the random digraph process to that
setting by contracting every low-degree vertex together with two chosen
neighbours into one exceptional vertex.

Every returned embedding is replayed against the digraph it claims to live
in before it is handed back.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .cover import CoverInstance, cover
from .errors import (ContractionFailure, CoverFailure, DomainFailure, ExactFailure, InputError,
                     PatternOutOfRange, PosaFailure)
from .graph import Digraph, Embedding, UGraph, bits, embedding_problems
from .models import sample_dstar
from .oracle import EMBED_CAP, find_embedding
from .params import PAPER, PipelineParams, checkpoints
from .patterns import OrientationPattern, pattern_slice, select_landmarks
from .posa import posa_search
from .pseudorandom import connect_depth, connect_pairs, find_bad_set, partition_exceptional
from .rng import child

# ---------------------------------------------------------------------------
# reports


@dataclass
class StageRecord:
    name: str
    ok: bool
    seconds: float
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "seconds": round(self.seconds, 6),
                "info": _jsonable(self.info)}


@dataclass
class EmbedReport:
    stages: list = field(default_factory=list)
    failure_stage: str | None = None
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failure_stage is None

    def to_dict(self, timings: bool = False) -> dict:
        stages = [s.to_dict() for s in self.stages]
        if not timings:
            for s in stages:
                s.pop("seconds")
        return {"ok": self.ok, "failure_stage": self.failure_stage, "message": self.message,
                "diagnostics": _jsonable(self.diagnostics), "stages": stages}


@dataclass
class EmbedResult:
    embedding: Embedding | None
    report: EmbedReport
    host: Digraph | None = None  # the digraph the embedding was replayed against
    failure: DomainFailure | None = None

    @property
    def ok(self) -> bool:
        return self.embedding is not None


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


class _Stages:
    def __init__(self, report: EmbedReport):
        self.report = report

    def run(self, name, fn):
        t0 = time.perf_counter()
        try:
            value, info = fn()
        except DomainFailure as exc:
            self.report.stages.append(StageRecord(name, False, time.perf_counter() - t0,
                                                  dict(exc.diagnostics)))
            raise
        self.report.stages.append(StageRecord(name, True, time.perf_counter() - t0, info))
        return value


def _fail(report: EmbedReport, exc: DomainFailure, stage: str | None = None) -> None:
    report.failure_stage = stage or exc.stage
    report.message = str(exc)
    report.diagnostics = dict(exc.diagnostics)


# ---------------------------------------------------------------------------
# helpers


def _induced(D: Digraph, keep: list[int]) -> Digraph:
    """D[keep] relabelled so that keep[j] becomes j."""
    idx = {v: j for j, v in enumerate(keep)}
    edges = []
    km = 0
    for v in keep:
        km |= 1 << v
    for v in keep:
        for w in bits(D.out_adj[v] & km):
            edges.append((idx[v], idx[w]))
    return Digraph.from_edges(len(keep), edges)


def _induced_u(G: UGraph, keep: list[int]) -> UGraph:
    idx = {v: j for j, v in enumerate(keep)}
    km = 0
    for v in keep:
        km |= 1 << v
    edges = [(idx[v], idx[w]) for v in keep for w in bits(G.adj[v] & km) if v < w]
    return UGraph.from_edges(len(keep), edges)


def _window_of(window, n: int) -> tuple[int, int]:
    if hasattr(window, "start"):
        start, length = window.start, window.length
    else:
        start, length = window
    start, length = int(start), int(length)
    if not (0 <= start < n) or not (0 <= length < n):
        raise InputError(f"window ({start}, {length}) does not fit a cycle of length {n}")
    return start, length


def _exact(D: Digraph, C: OrientationPattern, pins: dict) -> Embedding | None:
    if D.n > EMBED_CAP:
        raise InputError(f"exact route limited to n <= {EMBED_CAP}")
    return find_embedding(D, C, pins=pins)


# ---------------------------------------------------------------------------
# the main construction


def embed_cycle(D0: Digraph, X, C: OrientationPattern, window, f: dict,
                sprinkle_streams=None, params: PipelineParams = PAPER, rng=None,
                window_cap: int | None = None) -> EmbedResult:
    """Find a copy of ``C`` in D0 plus sprinkle with position f[x] sent to x.

    ``sprinkle_streams`` is a pair of digraphs whose antiparallel pairs are
    used in the connection and closing steps; by default both are sampled as
    D*(n, q) with the intensities in ``params``.  Domain failures are
    reported on the result, never raised.
    """
    n = D0.n
    if not isinstance(C, OrientationPattern):
        raise InputError("C must be an OrientationPattern")
    if C.n != n:
        raise InputError(f"pattern has length {C.n}, digraph has {n} vertices")
    X = frozenset(int(x) for x in X)
    if any(not (0 <= x < n) for x in X):
        raise InputError("X must be a subset of the vertex set")
    f = {int(k): int(v) % n for k, v in dict(f).items()}
    if set(f) != set(X):
        raise InputError("f must be defined exactly on X")
    if len(set(f.values())) != len(f):
        raise InputError("f must be injective")
    start, length = _window_of(window, n)
    rng = rng if rng is not None else np.random.default_rng(0)
    small = n <= params.exact_fallback_cap
    spacing = params.spacing(n)
    offs = {x: (p - start) % n for x, p in f.items()}
    if any(o > length for o in offs.values()):
        raise InputError("every f-image must lie on the window")
    if not small:
        cap = int(params.window_frac * n) if window_cap is None else int(window_cap)
        if length > cap:
            raise InputError(f"window length {length} exceeds {cap}")
        so = sorted(offs.values())
        for a, b in zip(so, so[1:]):
            if b - a < spacing:
                raise InputError(f"f-images {a} and {b} on the window are closer than {spacing}")
    if sprinkle_streams is None:
        D1 = sample_dstar(n, params.sprinkle_q(n, 1), child(rng, 1))
        D2 = sample_dstar(n, params.sprinkle_q(n, 2), child(rng, 2))
    else:
        D1, D2 = sprinkle_streams
        if D1.n != n or D2.n != n:
            raise InputError("sprinkle streams must live on the same vertex set")
    host = D0.union(D1).union(D2)
    report = EmbedReport()
    stages = _Stages(report)
    pins = {p: x for x, p in f.items()}

    if small:
        try:
            emb = stages.run("exact", lambda: _exact_stage(host, C, pins))
        except DomainFailure as exc:
            _fail(report, exc)
            return EmbedResult(None, report, host, exc)
        _replay(host, C, emb)
        return EmbedResult(emb, report, host)

    try:
        emb = _four_steps(D0, X, C, start, length, f, D1, D2, host, params, rng, stages)
    except DomainFailure as exc:
        _fail(report, exc)
        return EmbedResult(None, report, host, exc)
    _replay(host, C, emb)
    return EmbedResult(emb, report, host)


def _exact_stage(host, C, pins):
    emb = _exact(host, C, pins)
    if emb is None:
        raise ExactFailure("no copy of the pattern honours the pins", n=host.n)
    return emb, {"route": "exact", "n": host.n}


def _replay(D: Digraph, C, emb: Embedding) -> None:
    probs = embedding_problems(D, C, emb)
    if probs:
        raise AssertionError(f"stitched embedding failed replay: {probs[:3]}")


def _four_steps(D0, X, C, start, length, f, D1, D2, host, params, rng, stages):
    n = D0.n
    G1 = D1.mutual()
    G2 = D2.mutual()

    # -- step A ---------------------------------------------------------
    part = stages.run("partition", lambda: _partition_stage(D0, X, params, rng))

    def bad():
        B = set(find_bad_set(G1, part.V0, params, rng, avoid=X)) - set(X)
        V0, V1, V2 = set(part.V0), set(part.V1), set(part.V2)
        moved = sorted(B & V0)
        for v in moved:
            V0.discard(v)
            (V1 if len(V1) <= len(V2) else V2).add(v)
        return (frozenset(B), V0, V1, V2), {"size": len(B), "moved_from_V0": len(moved),
                                             "cap": params.bad_set_cap(n)}

    B, V0, V1, V2 = stages.run("bad-set", bad)

    # -- step B ---------------------------------------------------------
    h = params.cover_half_length(n)
    k_depth = connect_depth(params.d_value(n), params.m_value(n))
    gap = max(params.min_connect_length(n), 2 * k_depth + 1)
    sep = 2 * h + gap
    if params.spacing(n) < sep and len(X) > 1:
        raise InputError(f"spacing {params.spacing(n)} leaves no room for slices of "
                         f"length {2 * h} and connections of length {gap}")
    s0 = (start - h) % n
    span_cap = min(int(params.connect_budget_frac * n), n - 2 * h - 2)

    def slices():
        centres = {x: (f[x] - s0) % n for x in X}
        taken = sorted(centres.values())
        slots = []
        o = h
        need = len(B)
        while len(slots) < need and o <= h + span_cap:
            if all(abs(o - t) >= sep for t in taken):
                slots.append(o)
                taken.append(o)
            o += 1
        if len(slots) < need:
            raise CoverFailure(f"room for {len(slots)} of {need} bad-vertex slices",
                               v=None, needed=need, placed=len(slots), separation=sep)
        for v, o in zip(sorted(B), slots):
            centres[v] = o
        widened = max(centres.values()) - h > length
        return centres, {"slices": len(centres), "half_length": h, "separation": sep,
                         "window_widened": widened}

    def cover_stage():
        centres, info = slices()
        order = sorted(centres, key=lambda v: centres[v])
        fidx = {v: j for j, v in enumerate(order)}
        paths = [pattern_slice(C, (s0 + centres[v] - h) % n, 2 * h) for v in order]
        inst = CoverInstance(D0, X, B & V1, B & V2, V1 - B, V2 - B, paths, fidx,
                             params.cover_degree(n), params.level_budget(n))
        hier, _, res = cover(inst)
        info.update(levels=hier.r, selected=len(res.selected),
                    longest=max((len(Q.vertices) - 1 for Q in res.chosen()), default=0))
        return (centres, res), info

    centres, res = stages.run("cover", cover_stage)

    # -- step C ---------------------------------------------------------
    chosen = sorted(res.chosen(), key=lambda Q: centres[Q.centre])
    pos_of: dict[int, int] = {}  # vertex -> offset from s0
    for Q in chosen:
        c = centres[Q.centre]
        for t in range(Q.lo, Q.hi + 1):
            pos_of[Q.at(t)] = c + t
    ends = [(Q.vertices[0], Q.vertices[-1]) for Q in chosen]
    pairs = [(ends[i][1], ends[i + 1][0]) for i in range(len(ends) - 1)]
    lengths = [pos_of[b] - pos_of[a] for a, b in pairs]

    def connect():
        if not pairs:
            return [], {"pairs": 0, "total_length": 0}
        out = connect_pairs(G1, V0, B, pairs, lengths, params, rng, check_expansion=False)
        return out.paths, {"pairs": len(pairs), "total_length": sum(lengths)}

    rpaths = stages.run("connect", connect)
    for (a, _), path in zip(pairs, rpaths):
        base = pos_of[a]
        for t, w in enumerate(path):
            pos_of.setdefault(w, base + t)

    # -- step D ---------------------------------------------------------
    x1, yk = ends[0][0], ends[-1][1]
    lo_off, hi_off = pos_of[x1], pos_of[yk]
    used = set(pos_of) - {x1, yk}
    W = [v for v in range(n) if v not in used]
    L = hi_off - lo_off
    if len(W) != n - L + 1 or len(pos_of) != L + 1:
        raise AssertionError("cover and connection paths do not tile their span")

    def close():
        idx = {v: j for j, v in enumerate(W)}
        GW = _induced_u(G1, W)
        Wm = 0
        for v in W:
            Wm |= 1 << v
        extra = [(idx[u], idx[v]) for u, v in G2.edges() if (Wm >> u & 1) and (Wm >> v & 1)]
        order = rng.permutation(len(extra)) if extra else []
        stream = [extra[int(j)] for j in order]
        out = posa_search(GW, idx[yk], idx[x1], stream, budget=params.posa_budget)
        info = {"residual": len(W), "consumed": len(out.consumed), "rotations": out.rotations}
        if out.found:
            info["route"] = "posa"
            return [W[j] for j in out.path], info
        if len(W) <= params.exact_fallback_cap:
            path = _residual_exact(host, C, W, s0 + hi_off, yk, x1)
            if path is not None:
                info["route"] = "exact"
                return path, info
        raise PosaFailure("no Hamilton path through the residual graph", **info)

    path = stages.run("posa", close)
    for j, w in enumerate(path):
        if j == 0 or j == len(path) - 1:
            continue
        pos_of[w] = hi_off + j
    mapping = [0] * n
    for v, o in pos_of.items():
        mapping[(s0 + o) % n] = v
    pin_tuple = tuple(sorted((p, x) for x, p in f.items()))
    return Embedding(n, tuple(mapping), pin_tuple)


def _partition_stage(D0, X, params, rng):
    part = partition_exceptional(D0, X, params, rng)
    return part, {"V0": len(part.V0), "V1": len(part.V1), "V2": len(part.V2),
                  "iterations": part.iterations}


def _residual_exact(host: Digraph, C: OrientationPattern, W, first_pos: int, a: int, b: int):
    """Exact a-to-b path on W following C from position ``first_pos`` onwards."""
    n = host.n
    k = len(W)
    sub = _induced(host, W)
    idx = {v: j for j, v in enumerate(W)}
    sub = sub.with_edges([(idx[b], idx[a])])
    sigma = [C.bits[(first_pos + j) % n] for j in range(k - 1)] + [True]
    emb = find_embedding(sub, OrientationPattern(tuple(sigma)), pins={0: idx[a], k - 1: idx[b]})
    if emb is None:
        return None
    return [W[j] for j in emb.map]


# ---------------------------------------------------------------------------
# the process adapter


@dataclass
class Contraction:
    """Bookkeeping for the contracted instance."""

    n: int
    Y: tuple  # low-degree vertices, in landmark order
    x: dict
    y: dict
    landmark: dict  # v -> position of a_v in C
    keep: list  # original vertices kept, in new-index order
    z: dict  # v -> new index of z_v
    kept_pos: list  # positions of C surviving in C', in C' order
    provenance: dict = field(default_factory=dict)  # (new u, new w) -> (rule, original edge)


def _classify(H: Digraph, Y: set, T: set, lam: int, n: int, d: float):
    dplus = {v: H.out_degree(v) for v in Y}
    dminus = {v: H.in_degree(v) for v in Y}
    Yp = {v for v in Y if dplus[v] > d}
    Ym = {v for v in Y if dminus[v] > d}
    Y0 = {v for v in Y if dminus[v] >= 2}
    Y2 = {v for v in Y if dplus[v] >= 2}
    Bset: set = set()
    if lam >= n / 4:
        case = "I"
        Yb0 = (Y & Ym) | (Y0 & T)
        Yb2 = (Y & Yp) | ((Y2 & T) - Yb0)
        free = (Y - T) & (Yb0 | Yb2)
    else:
        case = "II"
        Bset = _forest_blockers(H, Y, T)
        Bp = {v for v in Bset if dplus[v] > d}
        Bm = {v for v in Bset if dminus[v] > d}
        Yb0 = {v for v in Y if dplus[v] == 0} | Bm
        Yb2 = ({v for v in Y if dminus[v] == 0} | Bp) - Yb0
        free = Bset
    Yb1 = Y - Yb0 - Yb2
    return case, (Yb0, Yb1, Yb2), free, Bset


def _nbhd(H: Digraph, S) -> int:
    m = 0
    for v in S:
        m |= H.out_adj[v] | H.in_adj[v]
    return m


def _star_forest_violation(H: Digraph, core: set, blocked: set):
    """None if H[core u N(core)] is a forest with |core| components avoiding
    ``blocked``; otherwise a component (vertex set) that breaks this."""
    if not core:
        return None
    n = H.n
    W = _nbhd(H, core)
    for v in core:
        W |= 1 << v
    seen = 0
    comps = 0
    for s in bits(W):
        if seen >> s & 1:
            continue
        comp = 1 << s
        frontier = [s]
        while frontier:
            u = frontier.pop()
            nb = (H.out_adj[u] | H.in_adj[u]) & W & ~comp
            comp |= nb
            frontier.extend(bits(nb))
        seen |= comp
        comps += 1
        cv = list(bits(comp))
        edges = sum((H.out_adj[u] & comp).bit_count() for u in cv)
        n_core = sum(1 for u in cv if u in core)
        if edges != len(cv) - 1 or n_core != 1 or any(u in blocked for u in cv):
            return cv
    del n
    return None


def _forest_blockers(H: Digraph, Y: set, T: set) -> set:
    """A minimal set B of Y - T whose removal leaves the neighbourhood of the
    rest of Y a forest with one component per vertex and no vertex of B."""
    B: set = set()
    for _ in range(len(Y) + 1):
        bad = _star_forest_violation(H, Y - B, B)
        if bad is None:
            break
        cand = sorted(v for v in bad if v in Y and v not in T and v not in B)
        if not cand:
            raise ContractionFailure("low-degree neighbourhoods overlap and cannot be separated",
                                     component=tuple(bad))
        B.add(cand[0])
    else:
        raise ContractionFailure("could not separate low-degree neighbourhoods")
    for v in sorted(B):
        trial = B - {v}
        if _star_forest_violation(H, Y - trial, trial) is None:
            B = trial
    return B


def _pick_neighbours(H: Digraph, Y: set, classes, free: set):
    """Choose x_v, y_v for every v in Y according to its class."""
    Yb0, Yb1, Yb2 = classes
    used: set = set()
    Ym = 0
    for v in Y:
        Ym |= 1 << v
    picks = {}

    def choose(v, pools):
        got = []
        for pool in pools:
            opts = [w for w in pool if w not in used and w not in got]
            if not opts:
                return None
            got.append(opts[0])
        return got

    order = sorted(Y, key=lambda v: (v in free, v))
    for v in order:
        outs = list(bits(H.out_adj[v] & ~Ym))
        ins = list(bits(H.in_adj[v] & ~Ym))
        if v in free:
            avoid = _nbhd(H, Y - {v})
            outs = [w for w in outs if not avoid >> w & 1]
            ins = [w for w in ins if not avoid >> w & 1]
        if v in Yb0:
            got = choose(v, (ins, ins))
        elif v in Yb2:
            got = choose(v, (outs, outs))
        else:
            got = choose(v, (outs, ins))
        if got is None:
            raise ContractionFailure(f"no admissible neighbours for low-degree vertex {v}", v=v)
        used.update(got)
        picks[v] = tuple(got)
    return picks


def _contracted_pattern(C: OrientationPattern, landmarks: list[int]):
    """C with b, a, c around each landmark a replaced by one forward-forward vertex."""
    n = C.n
    gone = set()
    for p in landmarks:
        gone.add((p - 1) % n)
        gone.add((p + 1) % n)
    kept = [q for q in range(n) if q not in gone]
    lm = set(landmarks)
    sigma = []
    for j, q in enumerate(kept):
        nxt = kept[(j + 1) % len(kept)]
        if (q + 1) % n == nxt:
            sigma.append(C.bits[q])
        else:
            # q = d_v -> f_v, or f_v -> e_v
            assert q in lm or nxt in lm
            sigma.append(True)
    return OrientationPattern(tuple(sigma)), kept


def contract(H: Digraph, extra: Digraph, C: OrientationPattern, picks: dict, landmark: dict):
    """Contract every (x_v, v, y_v) into z_v in both H and ``extra``."""
    n = H.n
    Y = sorted(landmark, key=lambda v: landmark[v])
    Yp = set(Y)
    for v in Y:
        Yp.update(picks[v])
    keep = [v for v in range(n) if v not in Yp]
    idx = {v: j for j, v in enumerate(keep)}
    z = {v: len(keep) + j for j, v in enumerate(Y)}
    nbar = len(keep) + len(Y)
    Cp, kept_pos = _contracted_pattern(C, [landmark[v] for v in Y])
    con = Contraction(n, tuple(Y), {v: picks[v][0] for v in Y}, {v: picks[v][1] for v in Y},
                      dict(landmark), keep, z, kept_pos)
    km = 0
    for v in keep:
        km |= 1 << v
    out = []
    for src_name, D in (("H", H), ("sprinkle", extra)):
        edges = [(idx[u], idx[w]) for u in keep for w in bits(D.out_adj[u] & km)]
        for v in Y:
            p = landmark[v]
            xv, yv, zv = con.x[v], con.y[v], z[v]
            if C.bits[(p - 2) % n]:  # d -> b
                for w in bits(D.in_adj[xv] & km):
                    edges.append((idx[w], zv))
                    con.provenance.setdefault((idx[w], zv), (src_name, "in-from-x", (w, xv)))
            else:  # b -> d
                for w in bits(D.out_adj[xv] & km):
                    edges.append((idx[w], zv))
                    con.provenance.setdefault((idx[w], zv), (src_name, "in-via-x", (xv, w)))
            if C.bits[(p + 1) % n]:  # c -> e
                for w in bits(D.out_adj[yv] & km):
                    edges.append((zv, idx[w]))
                    con.provenance.setdefault((zv, idx[w]), (src_name, "out-from-y", (yv, w)))
            else:  # e -> c
                for w in bits(D.in_adj[yv] & km):
                    edges.append((zv, idx[w]))
                    con.provenance.setdefault((zv, idx[w]), (src_name, "out-via-y", (w, yv)))
        out.append(Digraph.from_edges(nbar, edges))
    return out[0], out[1], Cp, con


def expand(con: Contraction, emb: Embedding) -> Embedding:
    """Undo the contraction: the vertex on f_v becomes x_v v y_v."""
    n = con.n
    back = {j: v for j, v in enumerate(con.keep)}
    zinv = {zv: v for v, zv in con.z.items()}
    mapping = [None] * n
    for j, u in enumerate(emb.map):
        q = con.kept_pos[j]
        if u in zinv:
            v = zinv[u]
            if con.landmark[v] != q:
                raise AssertionError("contracted vertex left its pinned position")
            mapping[(q - 1) % n] = con.x[v]
            mapping[q] = v
            mapping[(q + 1) % n] = con.y[v]
        else:
            mapping[q] = back[u]
    if any(m is None for m in mapping):
        raise AssertionError("expansion left a position empty")
    return Embedding(n, tuple(mapping))


def provenance_problems(con: Contraction, emb: Embedding, H: Digraph, extra: Digraph) -> list[str]:
    """Check every contracted edge used by ``emb`` against its source edge."""
    out = []
    m = len(emb.map)
    zs = set(con.z.values())
    for j in range(m):
        a, b = emb.map[j], emb.map[(j + 1) % m]
        for e in ((a, b), (b, a)):
            if e[0] in zs or e[1] in zs:
                rec = con.provenance.get(e)
                if rec is None:
                    continue
                src, _rule, (u, w) = rec
                D = H if src == "H" else extra
                if not D.has_edge(u, w):
                    out.append(f"edge {e} traced to missing {u}->{w}")
    return out


def process_embed(trace, i: int, C: OrientationPattern, params: PipelineParams = PAPER, rng=None,
                  cuts: tuple | None = None) -> EmbedResult:
    """Embed C into prefix(trace, i) via contraction of its low-degree vertices.

    The sprinkle is the part of the prefix not conditioned on (edges added
    after the first cut between vertices of high degree at that cut), plus
    an optional independent stream of antiparallel pairs on the same
    vertices, of intensity ``params.process_sprinkle * log n / n``.
    """
    n = trace.n
    if not isinstance(C, OrientationPattern) or C.n != n:
        raise InputError("C must be an OrientationPattern of length n")
    if not (0 <= i <= trace.N):
        raise InputError(f"i must lie in 0..{trace.N}")
    rng = rng if rng is not None else np.random.default_rng(0)
    Di = trace.prefix(i)
    low = [v for v in range(n) if Di.out_degree(v) + Di.in_degree(v) < 2]
    if low:
        raise InputError(f"vertex {low[0]} has total degree below 2 in the prefix")
    report = EmbedReport()
    stages = _Stages(report)
    if Di.m == n * (n - 1):
        emb = Embedding(n, tuple(range(n)))
        report.stages.append(StageRecord("shortcut", True, 0.0, {"complete": True}))
        _replay(Di, C, emb)
        return EmbedResult(emb, report, Di)

    ln = math.log(n)
    d = params.low_degree(n)
    i0, i1, _, _ = cuts if cuts is not None else checkpoints(n)
    i0, i1 = min(i0, i), min(i1, i)
    D_i0 = trace.prefix(i0)
    S = {v for v in range(n) if D_i0.out_degree(v) <= d or D_i0.in_degree(v) <= d}
    Sm = 0
    for v in S:
        Sm |= 1 << v
    late = trace.edges(i0, i)
    H = D_i0.with_edges([(u, w) for u, w in late if (Sm >> u & 1) or (Sm >> w & 1)])
    spr = Digraph.from_edges(n, [(u, w) for u, w in late
                                 if not (Sm >> u & 1) and not (Sm >> w & 1)])
    if params.process_sprinkle > 0:
        q = min(1.0, params.process_sprinkle * ln / n)
        rest = [v for v in range(n) if v not in S]
        fresh = sample_dstar(len(rest), q, child(rng, 3))
        spr = spr.with_edges((rest[u], rest[w]) for u, w in fresh.edges())

    lam = C.out_degrees().count(0)
    s_i = sum(1 for v in range(n) if Di.out_degree(v) == 0 or Di.in_degree(v) == 0)
    t_i = sum(1 for v in range(n) if Di.out_degree(v) == 1 and Di.in_degree(v) == 1)
    lo_b, hi_b = 1 + (s_i - 1) * ln, n - 1 - (t_i - 1) * ln
    small = n <= params.exact_fallback_cap

    try:
        def classify():
            if not (lo_b <= 2 * lam <= hi_b):
                raise PatternOutOfRange(
                    f"pattern has {2 * lam} direction changes, outside [{lo_b:.2f}, {hi_b:.2f}]",
                    changes=2 * lam, lower=lo_b, upper=hi_b, s=s_i, t=t_i)
            Y = {v for v in range(n) if H.out_degree(v) <= d or H.in_degree(v) <= d}
            K1 = trace.prefix(i1)
            T = {v for v in Y if K1.out_degree(v) <= d and K1.in_degree(v) <= d}
            T |= {v for v in Y if H.out_degree(v) <= d and H.in_degree(v) <= d}
            case, classes, free, Bset = _classify(H, Y, T, lam, n, d)
            info = {"case": case, "Y": len(Y), "classes": [len(c) for c in classes],
                    "s": s_i, "t": t_i, "S": len(S), "blockers": len(Bset),
                    "count_bounds_hold": (len(classes[0]) + len(classes[2]) <= math.ceil(2 * lam / ln)
                                          and len(classes[1]) <= math.ceil((n - 2 * lam) / ln))}
            return (Y, classes, free), info

        Y, classes, free = stages.run("classify", classify)

        def picks_stage():
            picks = _pick_neighbours(H, Y, classes, free)
            return picks, {"picked": 2 * len(picks)}

        picks = stages.run("contract", picks_stage)

        def landmarks():
            mu = [len(c) for c in classes]
            if small:
                # leave a gap of 4 so landmarks are also spaced across the wrap
                sel = select_landmarks(C, mu[0], mu[2], spacing_k=4, window_frac=(n - 3.5) / n,
                                       mu1=mu[1])
            else:
                sel = select_landmarks(C, mu[0], mu[2], spacing_k=max(4, params.spacing(n) + 2),
                                       window_frac=params.window_frac, mu1=mu[1])
            label = {}
            for j, cls in enumerate(classes):
                for v, p in zip(sorted(cls), (sel.Z0, sel.Z1, sel.Z2)[j]):
                    label[v] = p
            return (sel, label), {"start": sel.start, "length": sel.length, "case": sel.case}

        sel, label = stages.run("landmarks", landmarks)
        # orient x_v v y_v as b_v a_v c_v
        for v, p in label.items():
            for xv, yv in (picks[v], picks[v][::-1]):
                ok_b = H.has_edge(xv, v) if C.bits[(p - 1) % n] else H.has_edge(v, xv)
                ok_c = H.has_edge(v, yv) if C.bits[p % n] else H.has_edge(yv, v)
                if ok_b and ok_c:
                    picks[v] = (xv, yv)
                    break
            else:
                raise ContractionFailure(f"picked neighbours of {v} do not fit its landmark", v=v)
    except DomainFailure as exc:
        _fail(report, exc)
        return EmbedResult(None, report, Di.union(spr), exc)

    Hc, Sc, Cp, con = contract(H, spr, C, picks, label)
    zset = frozenset(con.z.values())
    newpos = {q: j for j, q in enumerate(con.kept_pos)}
    fz = {con.z[v]: newpos[label[v]] for v in label}
    start_c, length_c = _contracted_window(sel.start, sel.length, con.kept_pos, n)
    inner = embed_cycle(Hc, zset, Cp, (start_c, length_c), fz, (Sc, Sc), params, child(rng, 4),
                        window_cap=max(length_c, int(params.window_frac * n)))
    report.stages.extend(inner.report.stages)
    if not inner.ok:
        report.failure_stage = inner.report.failure_stage
        report.message = inner.report.message
        report.diagnostics = inner.report.diagnostics
        return EmbedResult(None, report, Di.union(spr), inner.failure)
    probs = provenance_problems(con, inner.embedding, H, spr)
    if probs:
        raise AssertionError(f"contracted edge without source: {probs[:3]}")
    emb = expand(con, inner.embedding)
    full = Di.union(spr)
    _replay(full, C, emb)
    return EmbedResult(emb, report, full)


def _contracted_window(start: int, length: int, kept_pos: list[int], n: int) -> tuple[int, int]:
    inside = [j for j, q in enumerate(kept_pos) if (q - start) % n <= length]
    m = len(kept_pos)
    if len(inside) == m:
        return 0, m - 1
    # the kept positions inside the window form one cyclic run
    inset = set(inside)
    first = next(j for j in inside if (j - 1) % m not in inset)
    return first, len(inside) - 1
