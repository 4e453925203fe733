"""Tunable constants for the pseudorandom toolkit and the embedding pipeline.

The ``paper`` profile uses the asymptotic constants literally.  Most of them
are degenerate for n in the hundreds (a degree bound of log n / 5000 is
below one), so the ``desk`` profile relaxes them; every relaxation is a
named field here.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields

from .errors import InputError


def _ln(n: float) -> float:
    return math.log(max(n, 2))


def _lnln(n: float) -> float:
    return math.log(max(_ln(n), math.e))


@dataclass(frozen=True)
class PipelineParams:
    profile: str = "paper"
    # pseudorandomness
    c_maxdeg: float = 100.0
    c_mindeg_inv: float = 500.0
    mindeg_floor: float = 0.0
    a3_deg_exponent: float = 2 / 3
    a3_expansion_exponent: float = 1 / 3
    a3_size_frac: float = 1.0
    a3_exact_cap: int = 16
    a3_trials: int = 200
    # partition
    partition_p: float = 0.2
    partition_deg_inv: float = 5000.0
    partition_deg_floor: float = 0.0
    partition_budget_factor: float = 50.0
    # bad set
    d_extend: float | None = None
    m_extend: float | None = None
    bad_peel_factor: float = 2.0
    bad_cap_factor: float = 1.0
    # expansion
    expander_ratio: float = 10.0
    expander_frac: float = 1 / 20
    expander_exact_cap: int = 20
    expander_trials: int = 100
    exact_subset_budget: int = 200_000
    # cover
    cover_deg_inv: float = 10_000.0
    cover_deg_floor: float = 0.0
    level_budget_factor: float = 4.0
    cover_len_factor: float = 4.0
    # connection and window
    min_connect_len_factor: float = 10.0
    connect_budget_frac: float = 1 / 8
    spacing_factor: float = 100.0
    window_frac: float = 1 / 100
    # sprinkling, intensities are multiples of log n / n
    sprinkle_1: float = 0.5e-4
    sprinkle_2: float = 0.5e-4
    posa_budget: int | None = None
    # process adapter
    low_deg_inv: float = 300.0
    low_deg_floor: float = 0.0
    process_sprinkle: float = 0.0
    exact_fallback_cap: int = 0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name in ("profile",) or v is None:
                continue
            if isinstance(v, (int, float)) and v < 0:
                raise InputError(f"parameter {f.name} must be non-negative")
        if self.d_extend is not None and self.d_extend < 3:
            raise InputError("d_extend must be at least 3")
        if self.m_extend is not None and self.m_extend < 1:
            raise InputError("m_extend must be at least 1")

    # -- derived quantities at a given n ----------------------------------
    def max_degree(self, n: int) -> float:
        return self.c_maxdeg * _ln(n)

    def min_degree(self, n: int) -> float:
        return max(self.mindeg_floor, _ln(n) / self.c_mindeg_inv)

    def a3_size(self, n: int) -> float:
        return self.a3_size_frac * n * _lnln(n) / _ln(n)

    def a3_degree(self, n: int) -> float:
        return _ln(n) ** self.a3_deg_exponent

    def a3_expansion(self, n: int) -> float:
        return _ln(n) ** self.a3_expansion_exponent

    def partition_degree(self, n: int) -> float:
        return max(self.partition_deg_floor, _ln(n) / self.partition_deg_inv)

    def partition_budget(self, n: int) -> int:
        return int(self.partition_budget_factor * n)

    def d_value(self, n: int) -> float:
        if self.d_extend is not None:
            return float(self.d_extend)
        return max(3.0, _ln(n) ** (1 / 3))

    def m_value(self, n: int) -> int:
        if self.m_extend is not None:
            return int(self.m_extend)
        return max(1, int(n / (100 * self.d_value(n))))

    def bad_set_cap(self, n: int) -> int:
        lll = math.log(max(_lnln(n), 1.0 + 1e-9))
        return max(1, int(self.bad_cap_factor * n * max(lll, 0.1) / _ln(n)))

    def cover_degree(self, n: int) -> float:
        return max(self.cover_deg_floor, _ln(n) / self.cover_deg_inv)

    def cover_half_length(self, n: int) -> int:
        return max(2, math.ceil(self.cover_len_factor * _ln(n) / _lnln(n)))

    def level_budget(self, n: int) -> int:
        return max(1, min(int(self.level_budget_factor * _ln(n) / _lnln(n)), self.cover_half_length(n) - 1))

    def min_connect_length(self, n: int) -> int:
        return max(1, math.ceil(self.min_connect_len_factor * _ln(n) / _lnln(n)))

    def spacing(self, n: int) -> int:
        return max(1, math.ceil(self.spacing_factor * _ln(n) / _lnln(n)))

    def sprinkle_q(self, n: int, which: int) -> float:
        c = self.sprinkle_1 if which == 1 else self.sprinkle_2
        return min(1.0, c * _ln(n) / n)

    def low_degree(self, n: int) -> float:
        return max(self.low_deg_floor, _ln(n) / self.low_deg_inv)

    def resolved(self, n: int) -> dict:
        """Concrete values at n, for logging into reports."""
        out = dataclasses.asdict(self)
        out.update(
            n=n,
            max_degree=self.max_degree(n),
            min_degree=self.min_degree(n),
            partition_degree=self.partition_degree(n),
            d=self.d_value(n),
            m=self.m_value(n),
            bad_set_cap=self.bad_set_cap(n),
            cover_degree=self.cover_degree(n),
            cover_half_length=self.cover_half_length(n),
            level_budget=self.level_budget(n),
            min_connect_length=self.min_connect_length(n),
            spacing=self.spacing(n),
            q1=self.sprinkle_q(n, 1),
            q2=self.sprinkle_q(n, 2),
            low_degree=self.low_degree(n),
        )
        return out

    def replace(self, **changes) -> "PipelineParams":
        names = {f.name for f in fields(self)}
        bad = set(changes) - names
        if bad:
            raise InputError(f"unknown parameters: {sorted(bad)}")
        return dataclasses.replace(self, **changes)


def checkpoints(n: int) -> tuple[int, int, int, int]:
    """The four process checkpoints i0 < i1 < i2 < i3 (ordered only for huge n)."""
    ln, lnln = _ln(n), _lnln(n)
    return (int(9 * n * ln / 20), int(n * ln / 2 - n * lnln), int(3 * n * ln / 4),
            int(n * ln + 2 * n * lnln))


PAPER = PipelineParams()

DESK = PipelineParams(
    profile="desk",
    mindeg_floor=2.0,
    partition_deg_floor=4.0,
    bad_peel_factor=1.0,
    d_extend=3.0,
    cover_deg_floor=2.0,
    cover_len_factor=1.0,
    min_connect_len_factor=1.0,
    connect_budget_frac=0.4,
    spacing_factor=4.0,
    window_frac=1 / 4,
    sprinkle_1=6.0,
    sprinkle_2=2.0,
    exact_fallback_cap=14,
)

PROFILES = {"paper": PAPER, "desk": DESK}


def get_profile(name: str) -> PipelineParams:
    try:
        return PROFILES[name]
    except KeyError:
        raise InputError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}") from None


def _parse_value(text: str):
    t = text.strip()
    if t.lower() in ("none", ""):
        return None
    try:
        if "/" in t:
            a, b = t.split("/", 1)
            return float(a) / float(b)
        if any(c in t for c in ".eE"):
            return float(t)
        return int(t)
    except ValueError:
        raise InputError(f"cannot parse parameter value {text!r}") from None


def loads_params(text: str, base: PipelineParams | None = None) -> PipelineParams:
    """Read ``key = value`` lines; a ``profile`` key selects the starting profile."""
    changes = {}
    profile = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"expected key=value, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "profile":
            profile = val
        else:
            changes[key] = _parse_value(val)
    start = get_profile(profile) if profile else (base or PAPER)
    return start.replace(**changes)


def load_params(path, base: PipelineParams | None = None) -> PipelineParams:
    with open(path, encoding="utf-8") as fh:
        return loads_params(fh.read(), base)


def dumps_params(params: PipelineParams) -> str:
    lines = [f"profile = {params.profile}"]
    for f in fields(params):
        if f.name == "profile":
            continue
        lines.append(f"{f.name} = {getattr(params, f.name)}")
    return "\n".join(lines) + "\n"
