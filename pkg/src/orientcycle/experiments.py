"""Hitting times, random process diagnostics, threshold scans and row emission."""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import InputError
from .graph import Digraph, bits
from .models import ProcessTrace, sample_dnp, sample_process
from .oracle import ALL_PATTERNS_CAP, EMBED_CAP, canonical_classes, contained_codes, find_embedding, pattern_in_codes
from .params import DESK, PipelineParams, checkpoints
from .patterns import OrientationPattern, canonical_string, p_threshold
from .pseudorandom import _a3_sampled
from .rng import stream

COLUMNS = ("experiment", "n", "seed", "trial", "i", "p", "pattern", "metric", "value")
SCHEMA = "orientcycle.rows/1"

# stream tags, one per experiment kind
_HITTING, _THRESHOLD, _PROPERTIES = 1, 2, 3


# ---------------------------------------------------------------------------
# rows


@dataclass(frozen=True)
class Row:
    experiment: str
    n: int
    seed: int
    trial: int | None
    i: int | None
    p: float | None
    pattern: str | None
    metric: str
    value: float | int


def _sort_key(r: Row):
    return (r.experiment, r.n, r.seed, -1 if r.trial is None else r.trial,
            -1.0 if r.p is None else r.p, r.metric)


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _num(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        return float(text)


def dumps_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_cell(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def loads_csv(text: str) -> list[Row]:
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if header is None or tuple(header) != COLUMNS:
        raise InputError(f"CSV header must be {','.join(COLUMNS)}")
    rows = []
    for rec in rd:
        if len(rec) != len(COLUMNS):
            raise InputError(f"malformed CSV row {rec!r}")
        e, n, s, t, i, p, pat, metric, val = rec
        p = _num(p)
        rows.append(Row(e, int(n), int(s), _num(t), _num(i), None if p is None else float(p),
                        pat or None, metric, _num(val)))
    return rows


def dumps_json(rows, meta: dict | None = None) -> str:
    doc = {"schema": SCHEMA, "columns": list(COLUMNS),
           "rows": [[getattr(r, c) for c in COLUMNS] for r in rows]}
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_json(text: str) -> list[Row]:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise InputError(f"unknown schema {doc.get('schema')!r}")
    return [Row(*rec) for rec in doc["rows"]]


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    if not 0 <= successes <= trials:
        raise InputError("successes must lie in 0..trials")
    z = float(norm.ppf(0.5 + confidence / 2))
    ph = successes / trials
    den = 1 + z * z / trials
    mid = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == trials else min(1.0, mid + half)
    return lo, hi


def _run_trials(fn, args_list, jobs: int):
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, *zip(*args_list)))


# ---------------------------------------------------------------------------
# hitting times


@dataclass
class ProcessStats:
    m0: int
    m1: int
    s: np.ndarray
    t: np.ndarray


def hitting_times(trace: ProcessTrace, upto: int | None = None) -> ProcessStats:
    """Degree hitting times and the s/t counts in one pass over the trace.

    ``m0`` is -1 if not reached by ``upto``; ``m1`` is only final when
    ``upto`` lies past the point where every semidegree is positive.
    """
    n, N = trace.n, trace.N
    upto = N if upto is None else upto
    if not 0 <= upto <= N:
        raise InputError(f"upto must lie in 0..{N}")
    out = [0] * n
    inn = [0] * n
    s = np.empty(upto + 1, dtype=np.int32)
    t = np.empty(upto + 1, dtype=np.int32)
    zero = n                   # vertices with in- or out-degree 0
    ones = 0                   # vertices with in- and out-degree 1
    low_total = n              # vertices with total degree < 2
    no_out, no_in = n, n
    m0 = 0 if n == 0 else -1
    m1 = 0
    s[0], t[0] = zero, ones
    i = 0
    for u, v in trace.iter_edges(upto):
        i += 1
        for x, is_out in ((u, True), (v, False)):
            a, b = out[x], inn[x]
            was_zero = a == 0 or b == 0
            was_one = a == 1 and b == 1
            was_low = a + b < 2
            if is_out:
                out[x] = a = a + 1
                if a == 1:
                    no_out -= 1
            else:
                inn[x] = b = b + 1
                if b == 1:
                    no_in -= 1
            zero += (a == 0 or b == 0) - was_zero
            ones += (a == 1 and b == 1) - was_one
            low_total += (a + b < 2) - was_low
        if m0 < 0 and low_total == 0:
            m0 = i
        if no_out or no_in:
            m1 = i
        s[i], t[i] = zero, ones
    return ProcessStats(m0, m1, s, t)


def _naive_stats(trace: ProcessTrace, upto: int | None = None) -> ProcessStats:
    """Per-prefix recomputation, used to cross-check ``hitting_times``."""
    n, N = trace.n, trace.N
    upto = N if upto is None else upto
    s, t = [], []
    m0, m1 = -1, 0
    for i in range(upto + 1):
        D = trace.prefix(i)
        od = [D.out_degree(v) for v in range(n)]
        idg = [D.in_degree(v) for v in range(n)]
        s.append(sum(1 for v in range(n) if od[v] == 0 or idg[v] == 0))
        t.append(sum(1 for v in range(n) if od[v] == 1 and idg[v] == 1))
        if m0 < 0 and all(od[v] + idg[v] >= 2 for v in range(n)):
            m0 = i
        if min(od) == 0 or min(idg) == 0:
            m1 = i
    return ProcessStats(m0, m1, np.array(s, dtype=np.int32), np.array(t, dtype=np.int32))


# ---------------------------------------------------------------------------
# random process diagnostics

PROPERTY_NAMES = tuple(f"RP{k}" for k in range(1, 13))
_USES = {
    "RP1": (0,), "RP2": (0, 3), "RP3": (1, 3), "RP4": (1, 3), "RP5": (2, 3), "RP6": (1, 3),
    "RP7": (1, 3), "RP8": (3,), "RP9": (3,), "RP10": (1,), "RP11": (2,), "RP12": (3,),
}


@dataclass
class PropertyCheck:
    name: str
    passed: bool
    measured: object = None
    bound: object = None
    witness: object = None


@dataclass
class PropertyReport:
    n: int
    d: float
    checkpoints: tuple
    checks: dict = field(default_factory=dict)

    def __getitem__(self, key) -> PropertyCheck:
        return self.checks[key]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())


def _low_set(D: Digraph, d: float, both: bool = False) -> int:
    m = 0
    for v in range(D.n):
        lo_out = D.out_degree(v) <= d
        lo_in = D.in_degree(v) <= d
        if (lo_out and lo_in) if both else (lo_out or lo_in):
            m |= 1 << v
    return m


def _und(D: Digraph) -> list[int]:
    return [D.out_adj[v] | D.in_adj[v] for v in range(D.n)]


def _short_paths(und: list[int], S: int, cap: int) -> tuple[int, bool]:
    """Count paths of length 1..4 joining two vertices of S, stopping above ``cap``."""
    count = 0
    for s in bits(S):
        later = S & ~((1 << (s + 1)) - 1)
        stack = [(s, 1 << s, 0)]
        while stack:
            v, seen, depth = stack.pop()
            nb = und[v] & ~seen
            if depth + 1 <= 4:
                count += (nb & later).bit_count()
                if count > cap:
                    return count, True
            if depth + 1 < 4:
                for w in bits(nb):
                    stack.append((w, seen | (1 << w), depth + 1))
    return count, False


def _short_cycle(D: Digraph, und: list[int], S: int):
    for v in bits(S):
        both = D.out_adj[v] & D.in_adj[v]
        if both:
            return (v, (both & -both).bit_length() - 1)
    for v in bits(S):
        for u in bits(und[v]):
            common = und[v] & und[u]
            if common:
                return (v, u, (common & -common).bit_length() - 1)
    return None


def _star_problem(D: Digraph, core: int):
    """Check that core plus its neighbours spans |core| disjoint stars centred in core.

    Returns (problem or None, spanned vertex mask).
    """
    und = _und(D)
    W = core
    for c in bits(core):
        W |= und[c]
    seen = 0
    comps = 0
    for v in bits(W):
        if seen >> v & 1:
            continue
        comp, frontier = 1 << v, 1 << v
        while frontier:
            nxt = 0
            for x in bits(frontier):
                nxt |= und[x] & W
            frontier = nxt & ~comp
            comp |= nxt
        seen |= comp
        comps += 1
        centres = comp & core
        if centres.bit_count() != 1:
            return ("component", tuple(bits(comp))), W
        c = centres.bit_length() - 1
        arcs = sum((D.out_adj[x] & comp).bit_count() for x in bits(comp))
        if arcs != comp.bit_count() - 1 or (comp & ~und[c] & ~centres):
            return ("not a star", tuple(bits(comp))), W
    if comps != core.bit_count():
        return ("components", comps), W
    return None, W


def _rp7(und: list[int], S: int):
    N1 = N2 = 0
    for s in bits(S):
        N2 |= N1 & und[s]
        N1 |= und[s]
    worst = (0, None)
    for v in range(len(und)):
        if S >> v & 1:
            W = S | N2 | (N1 & ~und[v])
        else:
            W = S | N1
        c = (und[v] & W).bit_count()
        if c > worst[0]:
            worst = (c, v)
    return worst


def check_process_properties(trace: ProcessTrace, which=PROPERTY_NAMES, rng=None,
                             expansion_trials: int = 200, cuts=None) -> PropertyReport:
    """Evaluate the selected properties literally at the four checkpoints.

    These hold only with high probability, so a failure is a measurement,
    not an error.  Only the checkpoints a property uses need to be ordered.
    """
    which = tuple(which)
    unknown = set(which) - set(PROPERTY_NAMES)
    if unknown:
        raise InputError(f"unknown properties {sorted(unknown)}")
    n, N = trace.n, trace.N
    cuts = tuple(checkpoints(n)) if cuts is None else tuple(int(c) for c in cuts)
    ln = math.log(n)
    lnln = math.log(ln) if ln > 1 else 0.0
    d = ln / 300
    report = PropertyReport(n, d, cuts)
    if not which:
        return report
    bad = []
    for name in which:
        used = _USES[name]
        idx = [cuts[j] for j in used]
        if any(not 0 <= x <= N for x in idx) or any(a >= b for a, b in zip(idx, idx[1:])):
            bad.append((name, {f"i{j}": cuts[j] for j in used}))
    if bad:
        raise InputError(f"checkpoints unusable at n={n}: {bad}")
    K = {}

    def k(j):
        if j not in K:
            K[j] = trace.prefix(cuts[j])
        return K[j]

    S = {}

    def low(j):
        if j not in S:
            S[j] = _low_set(k(j), d)
        return S[j]

    rng = rng if rng is not None else np.random.default_rng(0)
    for name in which:
        if name == "RP1":
            size = low(0).bit_count()
            bound = n ** (2 / 3)
            res = PropertyCheck(name, size <= bound, size, bound)
        elif name == "RP2":
            S0 = low(0)
            cnt = sum(1 for u, v in trace.edges(cuts[0], cuts[3]) if (S0 >> u | S0 >> v) & 1)
            res = PropertyCheck(name, cnt <= n, cnt, n)
        elif name == "RP3":
            bound = n ** (1 / 6)
            cnt, truncated = _short_paths(_und(k(3)), low(1), math.floor(bound))
            res = PropertyCheck(name, cnt <= bound, cnt, bound, "count truncated" if truncated else None)
        elif name == "RP4":
            cyc = _short_cycle(k(3), _und(k(3)), low(1))
            res = PropertyCheck(name, cyc is None, 0 if cyc is None else 1, 0, cyc)
        elif name == "RP5":
            prob, _ = _star_problem(k(3), low(2))
            res = PropertyCheck(name, prob is None, low(2).bit_count(), None, prob)
        elif name == "RP6":
            T = _low_set(k(1), d, both=True)
            prob, W = _star_problem(k(3), T)
            if prob is None and W & (low(1) & ~T):
                prob = ("meets S1 minus T", tuple(bits(W & low(1) & ~T)))
            res = PropertyCheck(name, prob is None, T.bit_count(), None, prob)
        elif name == "RP7":
            c, v = _rp7(_und(k(3)), low(1))
            res = PropertyCheck(name, c <= 2, c, 2, v if c > 2 else None)
        elif name == "RP8":
            found = _a3_sampled(k(3), ln ** (2 / 3) / 2, 100 * ln ** (1 / 3),
                                100 * n * lnln / ln, expansion_trials, rng)
            wit = None
            if found:
                sign, A, B = found
                wit = (sign, tuple(bits(A)), tuple(bits(B)))
            res = PropertyCheck(name, found is None, None, None, wit)
        elif name == "RP9":
            D = k(3)
            top = max(max(D.out_degree(v), D.in_degree(v)) for v in range(n))
            res = PropertyCheck(name, top <= 50 * ln, top, 50 * ln)
        elif name == "RP10":
            D = k(1)
            iso = [v for v in range(n) if D.out_degree(v) + D.in_degree(v) == 0]
            res = PropertyCheck(name, bool(iso), len(iso), 1, iso[0] if iso else None)
        elif name == "RP11":
            D = k(2)
            cnt = sum(1 for v in range(n) if D.in_degree(v) == 0)
            res = PropertyCheck(name, cnt >= n ** (1 / 5), cnt, n ** (1 / 5))
        else:
            D = k(3)
            lo = min(min(D.out_degree(v), D.in_degree(v)) for v in range(n))
            res = PropertyCheck(name, lo >= 2, lo, 2)
        report.checks[name] = res
    return report


def _props_trial(n, seed, trial, which, expansion_trials):
    rng = stream(seed, _PROPERTIES, trial)
    trace = sample_process(n, rng)
    rep = check_process_properties(trace, which, rng, expansion_trials)
    rows = []
    for name, c in rep.checks.items():
        rows.append(Row("properties", n, seed, trial, None, None, None, name, int(c.passed)))
    return rows


def property_experiment(n: int, trials: int, seed: int, which=PROPERTY_NAMES, jobs: int = 1,
                        expansion_trials: int = 200) -> list[Row]:
    """Per-trial pass/fail rows for the selected properties."""
    which = tuple(which)
    out = _run_trials(_props_trial, [(n, seed, t, which, expansion_trials) for t in range(trials)], jobs)
    return sorted((r for rows in out for r in rows), key=_sort_key)


# ---------------------------------------------------------------------------
# hitting-time experiment


def direction_change_window(n: int, s: int, t: int) -> tuple[float, float]:
    """Range of direction-change counts covered at a prefix with these s, t."""
    ln = math.log(n)
    return 1 + (s - 1) * ln, n - 1 - (t - 1) * ln


def _hitting_trial(n, seed, trial, cap):
    rng = stream(seed, _HITTING, trial)
    trace = sample_process(n, rng)
    st = hitting_times(trace, trace.N)
    m0, m1 = st.m0, st.m1
    classes = canonical_classes(n)
    directed = canonical_string(OrientationPattern.directed(n))
    rows = []

    def row(i, metric, value):
        rows.append(Row("hitting", n, seed, trial, i, None, None, metric, value))

    row(None, "m0", m0)
    row(None, "m1", m1)
    F1 = contained_codes(trace.prefix(m1), cap=cap)
    row(m1, "directed_absent", int(not pattern_in_codes(F1, OrientationPattern.directed(n))))
    row(m1, "all_nondirected", int(all(pattern_in_codes(F1, C) for C in classes if str(C) != directed)))
    F2 = contained_codes(trace.prefix(m1 + 1), cap=cap)
    row(m1 + 1, "all_patterns", int(all(pattern_in_codes(F2, C) for C in classes)))
    F0 = contained_codes(trace.prefix(m0), cap=cap)
    s, t = int(st.s[m0]), int(st.t[m0])
    lo, hi = direction_change_window(n, s, t)
    inside = [C for C in classes if lo <= C.direction_changes <= hi]
    row(m0, "s", s)
    row(m0, "t", t)
    row(m0, "window_patterns", len(inside))
    row(m0, "window_contained", int(all(pattern_in_codes(F0, C) for C in inside)))
    return rows


def hitting_experiment(n: int, trials: int, seed: int, jobs: int = 1,
                       cap: int = ALL_PATTERNS_CAP) -> list[Row]:
    if n > cap:
        raise InputError(f"all-patterns checks limited to n <= {cap}")
    if n < 3:
        raise InputError("patterns need n >= 3")
    out = _run_trials(_hitting_trial, [(n, seed, t, cap) for t in range(trials)], jobs)
    return sorted((r for rows in out for r in rows), key=_sort_key)


def summarize(rows, metric: str, confidence: float = 0.95) -> dict:
    """Frequency of a 0/1 metric with its Wilson interval."""
    vals = [r.value for r in rows if r.metric == metric]
    k = int(sum(vals))
    lo, hi = wilson_interval(k, len(vals), confidence)
    return {"metric": metric, "successes": k, "trials": len(vals),
            "frequency": k / len(vals) if vals else float("nan"), "lower": lo, "upper": hi}


# ---------------------------------------------------------------------------
# threshold scans


@dataclass(frozen=True)
class ScanPoint:
    p: float
    successes: int
    trials: int
    frequency: float
    lower: float
    upper: float
    p_threshold: float


def _split_mutual(D: Digraph, rng):
    """Hand each antiparallel pair of D to one of two sprinkle streams."""
    n = D.n
    one, two = [], []
    for u, v in D.mutual().edges():
        (one if rng.random() < 0.5 else two).extend(((u, v), (v, u)))
    return Digraph.from_edges(n, one), Digraph.from_edges(n, two)


def _contains(D: Digraph, C: OrientationPattern, engine: str, params, rng) -> bool:
    if engine == "oracle":
        return find_embedding(D, C) is not None
    from .pipeline import embed_cycle
    n = D.n
    D1, D2 = _split_mutual(D, rng)
    length = max(1, int(params.window_frac * n)) if n > params.exact_fallback_cap else n - 1
    res = embed_cycle(D, (), C, (0, length), {}, (D1, D2), params, rng)
    return res.ok


def _threshold_trial(C, p, k, seed, trial, engine, params):
    rng = stream(seed, _THRESHOLD, k, trial)
    D = sample_dnp(C.n, p, rng)
    return int(_contains(D, C, engine, params, rng))


def threshold_scan(C: OrientationPattern, n: int, p_grid, trials: int, seed: int = 0,
                   engine: str = "oracle", params: PipelineParams = DESK, jobs: int = 1,
                   cap: int = EMBED_CAP) -> list[ScanPoint]:
    """Containment frequency of C in D(n, p) along a grid of p, sorted by p.

    With the pipeline engine the host is D(n, p) itself (its antiparallel
    pairs double as the sprinkle), so frequencies are lower bounds.
    """
    if engine not in ("oracle", "pipeline"):
        raise InputError(f"unknown engine {engine!r}")
    if C.n != n:
        raise InputError("pattern length must equal n")
    if engine == "oracle" and n > cap:
        raise InputError(f"oracle engine limited to n <= {cap}")
    grid = sorted(float(p) for p in p_grid)
    if any(not 0 <= p <= 1 for p in grid):
        raise InputError("probabilities must lie in [0, 1]")
    pc = p_threshold(C, n)
    args = [(C, p, k, seed, t, engine, params) for k, p in enumerate(grid) for t in range(trials)]
    hits = _run_trials(_threshold_trial, args, jobs)
    out = []
    for k, p in enumerate(grid):
        got = sum(hits[k * trials:(k + 1) * trials])
        lo, hi = wilson_interval(got, trials)
        out.append(ScanPoint(p, got, trials, got / trials if trials else float("nan"), lo, hi, pc))
    return out


def scan_rows(points, C: OrientationPattern, n: int, seed: int, engine: str = "oracle") -> list[Row]:
    return [Row(f"threshold-{engine}", n, seed, None, None, pt.p, str(C), "frequency", pt.frequency)
            for pt in points]


def scan_meta(points) -> dict:
    return {"points": [asdict(pt) for pt in points]}


def paired_exact_test(a, b) -> float:
    """One-sided exact McNemar p-value for 'a succeeds more often than b'.

    ``a`` and ``b`` are paired 0/1 outcomes on the same hosts.
    """
    from scipy.stats import binomtest
    only_a = sum(1 for x, y in zip(a, b) if x and not y)
    only_b = sum(1 for x, y in zip(a, b) if y and not x)
    if only_a + only_b == 0:
        return 1.0
    return float(binomtest(only_a, only_a + only_b, 0.5, alternative="greater").pvalue)


def paired_threshold_trials(C1: OrientationPattern, C2: OrientationPattern, p: float, trials: int,
                            seed: int = 0, jobs: int = 1) -> tuple[list[int], list[int]]:
    """Oracle containment of two patterns on the same D(n, p) samples."""
    if C1.n != C2.n:
        raise InputError("patterns must have the same length")
    out = _run_trials(_paired_trial, [(C1, C2, p, seed, t) for t in range(trials)], jobs)
    return [a for a, _ in out], [b for _, b in out]


def _paired_trial(C1, C2, p, seed, trial):
    rng = stream(seed, _THRESHOLD, 10**6, trial)
    D = sample_dnp(C1.n, p, rng)
    return int(find_embedding(D, C1) is not None), int(find_embedding(D, C2) is not None)


__all__ = [
    "COLUMNS", "SCHEMA", "Row", "dumps_csv", "loads_csv", "dumps_json", "loads_json", "wilson_interval",
    "ProcessStats", "hitting_times", "PROPERTY_NAMES", "PropertyCheck", "PropertyReport",
    "check_process_properties", "property_experiment", "direction_change_window", "hitting_experiment",
    "summarize", "ScanPoint", "threshold_scan", "scan_rows", "scan_meta", "paired_exact_test",
    "paired_threshold_trials",
]
