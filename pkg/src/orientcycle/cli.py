"""Command-line entry point.

Exit status: 0 on success, 1 when an algorithm ran but reached no positive
result (no embedding, a failed check), 2 on bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .errors import DomainFailure, InputError
from .experiments import (dumps_csv, dumps_json, hitting_experiment, property_experiment, scan_meta,
                          scan_rows, summarize, threshold_scan, PROPERTY_NAMES, Row)
from .graph import UGraph, biorient, dumps_edgelist, read_edgelist
from .models import (sample_dnp, sample_dstar, sample_gnp,
                     sample_process)
from .oracle import EMBED_CAP, find_embedding
from .params import PAPER, PipelineParams, get_profile, load_params
from .patterns import OrientationPattern, parse_pattern
from .rng import child, default_seed, stream


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, trials: int | None = None) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="global seed (default: $ORIENTCYCLE_SEED or 0)")
    p.add_argument("--trials", type=int, default=trials, help="number of seeded trials (default: %(default)s)")
    p.add_argument("--profile", choices=["paper", "desk"], default="paper",
                   help="parameter profile (default: %(default)s)")
    p.add_argument("--params", default=None, help="key = value file overriding the profile")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for trials (default: %(default)s)")


def _params(args) -> PipelineParams:
    base = get_profile(args.profile)
    return load_params(args.params, base) if args.params else base


def _seed(args) -> int:
    return default_seed() if args.seed is None else args.seed


def _emit(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _rows_out(args, rows, meta=None) -> None:
    _emit(args, dumps_json(rows, meta) if args.format == "json" else dumps_csv(rows))


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _pins(specs, n) -> dict:
    pins = {}
    for s in specs or []:
        try:
            a, b = s.split("=")
            pins[int(a)] = int(b)
        except ValueError:
            raise InputError(f"pin must look like POS=VERTEX, got {s!r}") from None
    return pins


def _grid(text: str) -> list[float]:
    try:
        lo, hi, k = text.split(":")
        lo, hi, k = float(lo), float(hi), int(k)
    except ValueError:
        try:
            return [float(x) for x in text.split(",")]
        except ValueError:
            raise InputError(f"grid must be LO:HI:COUNT or a comma list, got {text!r}") from None
    if k < 1:
        raise InputError("grid needs at least one point")
    if k == 1:
        return [lo]
    return [lo + (hi - lo) * j / (k - 1) for j in range(k)]


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    rng = stream(_seed(args))
    if args.model == "process":
        trace = sample_process(args.n, rng)
        upto = trace.N if args.upto is None else args.upto
        _emit(args, trace.dumps(upto))
        return 0
    if args.p is None:
        raise InputError("--p is required for this model")
    G = {"dnp": sample_dnp, "gnp": sample_gnp, "dstar": sample_dstar}[args.model](args.n, args.p, rng)
    _emit(args, dumps_edgelist(G))
    return 0


def cmd_embed(args) -> int:
    G = read_edgelist(args.graph)
    if isinstance(G, UGraph):
        G = biorient(G)
    C = parse_pattern(args.pattern)
    emb = find_embedding(G, C, _pins(args.pin, G.n), cap=args.cap)
    if emb is None:
        sys.stderr.write("no embedding\n")
        return 1
    _emit(args, emb.lines())
    return 0


def cmd_pipeline(args) -> int:
    params = _params(args)
    n = args.n
    C = parse_pattern(args.pattern)
    if C.n != n:
        raise InputError(f"pattern has length {C.n}, expected {n}")
    rng = stream(_seed(args))
    D0 = sample_dnp(n, min(1.0, args.density * math.log(n) / n), child(rng, 0))
    from .pipeline import embed_cycle
    length = args.window if args.window is not None else max(1, int(params.window_frac * n))
    res = embed_cycle(D0, (), C, (0, min(length, n - 1)), {}, None, params, rng)
    out = {"n": n, "pattern": str(C), "profile": params.profile, "seed": _seed(args),
           "report": res.report.to_dict(timings=False)}
    _emit(args, _dump(out))
    if res.ok and args.embedding_out:
        with open(args.embedding_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(res.embedding.lines())
    return 0 if res.ok else 1


def cmd_process(args) -> int:
    from .experiments import hitting_times
    from .pipeline import process_embed
    params = _params(args)
    rng = stream(_seed(args))
    trace = sample_process(args.n, child(rng, 0))
    st = hitting_times(trace)
    i = {"m0": st.m0, "m1+1": st.m1 + 1}.get(args.index)
    if i is None:
        try:
            i = int(args.index)
        except ValueError:
            raise InputError("--index must be m0, m1+1 or an integer") from None
    C = parse_pattern(args.pattern)
    res = process_embed(trace, i, C, params, rng)
    out = {"n": args.n, "i": i, "m0": st.m0, "m1": st.m1, "pattern": str(C),
           "profile": params.profile, "seed": _seed(args), "report": res.report.to_dict(timings=False)}
    _emit(args, _dump(out))
    return 0 if res.ok else 1


def cmd_hitting(args) -> int:
    rows = hitting_experiment(args.n, args.trials, _seed(args), jobs=args.jobs)
    meta = {m: summarize(rows, m) for m in ("directed_absent", "all_nondirected", "all_patterns",
                                              "window_contained")}
    _rows_out(args, rows, meta)
    return 0


def cmd_threshold(args) -> int:
    C = parse_pattern(args.pattern)
    n = args.n if args.n is not None else C.n
    pts = threshold_scan(C, n, _grid(args.grid), args.trials, _seed(args), args.engine,
                         _params(args), jobs=args.jobs)
    _rows_out(args, scan_rows(pts, C, n, _seed(args), args.engine), scan_meta(pts))
    return 0


def cmd_properties(args) -> int:
    which = tuple(args.which.split(",")) if args.which else PROPERTY_NAMES
    rows = property_experiment(args.n, args.trials, _seed(args), which, jobs=args.jobs)
    meta = {m: summarize(rows, m) for m in which}
    _rows_out(args, rows, meta)
    return 0


def cmd_verify_pseudo(args) -> int:
    from .pipeline import _jsonable
    from .pseudorandom import check_pseudorandom
    G = read_edgelist(args.graph)
    if isinstance(G, UGraph):
        G = biorient(G)
    X = [int(x) for x in args.X.split(",")] if args.X else []
    rep = check_pseudorandom(G, X, _params(args), stream(_seed(args)), mode=args.mode)
    out = {"passed": rep.passed,
           "checks": {k: {"passed": c.passed, "measured": c.measured, "witness": c.witness, "mode": c.mode}
                      for k, c in sorted(rep.checks.items())}}
    _emit(args, _dump(_jsonable(out)))
    return 0 if rep.passed else 1


def _connected_gnp(n, p, rng, tries=1000):
    for _ in range(tries):
        G = sample_gnp(n, p, rng)
        if G.is_connected():
            return G
    raise DomainFailure(f"no connected sample of G({n}, {p}) in {tries} tries")


def cmd_posa(args) -> int:
    from .posa import hamilton_path_problems, posa_search
    n = args.n
    seed = _seed(args)
    ln = math.log(n)
    rows = []
    for t in range(args.trials):
        rng = stream(seed, 4, t)
        G0 = _connected_gnp(n, min(1.0, args.c0 * ln / n), rng)
        spr = list(sample_gnp(n, min(1.0, args.c1 * ln / n), rng).edges())
        order = rng.permutation(len(spr))
        spr = [spr[k] for k in order]
        x, y = 0, n - 1
        res = posa_search(G0, x, y, spr)
        ok = res.path is not None and not hamilton_path_problems(G0, res.path, x, y, res.consumed)
        rows.append(Row("posa", n, seed, t, None, None, None, "found", int(ok)))
        rows.append(Row("posa", n, seed, t, None, None, None, "sprinkle_used", len(res.consumed)))
    _rows_out(args, rows, {"found": summarize(rows, "found")})
    return 0


def _directed_cycle_oracle(n):
    C = OrientationPattern.directed(n)
    return lambda D: find_embedding(D, C) is not None


def cmd_coupling(args) -> int:
    from fractions import Fraction

    from .models import exact_chain_probability, monotone_family_check
    n, seed = args.n, _seed(args)
    fam = _directed_cycle_oracle(n)
    rows = []
    if args.exact:
        p = Fraction(args.p).limit_denominator(10**6)
        ell = n * (n - 1) // 2
        for j in (0, ell):
            val = exact_chain_probability(n, p, j, fam)
            rows.append(Row("coupling-exact", n, seed, None, j, float(p), str(OrientationPattern.directed(n)),
                            "probability", float(val)))
    else:
        chk = monotone_family_check(None, fam, args.p, n, args.trials, stream(seed, 5))
        for metric, val in (("freq_j0", chk.freq_j0), ("freq_jl", chk.freq_jl),
                            ("difference", chk.difference), ("lower_bound", chk.lower_bound)):
            rows.append(Row("coupling", n, seed, None, None, args.p, str(OrientationPattern.directed(n)),
                            metric, val))
    _rows_out(args, rows)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orientcycle", description="Oriented Hamilton cycles in random digraphs.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="sample a random graph or process trace")
    _common(p)
    p.add_argument("--model", choices=["dnp", "gnp", "dstar", "process"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None, help="edge or pair probability")
    p.add_argument("--upto", type=int, default=None, help="process: number of edges to write (default: all)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("embed", help="exact search for a copy of a pattern in a graph file")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--pattern", required=True, help="'+-' string or directed:N, anti:N, random:N:CHANGES:SEED")
    p.add_argument("--pin", action="append", help="POS=VERTEX, repeatable")
    p.add_argument("--cap", type=int, default=EMBED_CAP, help="largest n searched (default: %(default)s)")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("pipeline", help="run the staged embedding on D(n, c log n / n)")
    p.add_argument("action", nargs="?", choices=["run"], default="run")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--density", type=float, default=20.0, help="c in p = c log n / n (default: %(default)s)")
    p.add_argument("--window", type=int, default=None,
                   help=f"window length (default: n * window_frac, {PAPER.window_frac} for paper)")
    p.add_argument("--embedding-out", default=None, help="write 'pos vertex' lines here on success")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("process", help="embed into a prefix of a random digraph process")
    _common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--index", default="m0", help="m0, m1+1 or an edge count (default: %(default)s)")
    p.set_defaults(func=cmd_process)

    for name, fn, help_ in (("hitting", cmd_hitting, "hitting-time experiment"),
                            ("properties", cmd_properties, "random process property frequencies")):
        p = sub.add_parser(name, help=help_)
        _common(p, trials=100)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--format", choices=["csv", "json"], default="csv")
        if name == "properties":
            p.add_argument("--which", default=None, help="comma list such as RP1,RP9 (default: all)")
        p.set_defaults(func=fn)

    p = sub.add_parser("threshold", help="containment frequency along a grid of p")
    _common(p, trials=100)
    p.add_argument("--pattern", required=True)
    p.add_argument("--n", type=int, default=None, help="defaults to the pattern length")
    p.add_argument("--grid", required=True, help="LO:HI:COUNT or a comma list")
    p.add_argument("--engine", choices=["oracle", "pipeline"], default="oracle")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("verify-pseudo", help="check the pseudorandomness conditions on a graph file")
    _common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--X", default="", help="comma list of exceptional vertices")
    p.add_argument("--mode", choices=["auto", "exact", "sampled"], default="auto")
    p.set_defaults(func=cmd_verify_pseudo)

    p = sub.add_parser("posa", help="Hamilton x,y-paths in G(n, c0 log n/n) with sprinkling")
    _common(p, trials=1)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c0", type=float, default=3.0, help="base density constant (default: %(default)s)")
    p.add_argument("--c1", type=float, default=2.0, help="sprinkle density constant (default: %(default)s)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_posa)

    p = sub.add_parser("coupling", help="directed cycle containment at both ends of the coupling chain")
    _common(p, trials=1000)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--exact", action="store_true", help="enumerate all outcomes (n <= 4)")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_coupling)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "trials", None) is not None and args.trials < 0:
        sys.stderr.write("--trials must be non-negative\n")
        return 2
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2
    except DomainFailure as exc:
        sys.stderr.write(f"{exc.stage} failure: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
