"""Oriented cycle patterns and landmark selection.

A pattern of length n is a tuple of booleans ``bits``; ``bits[k]`` is True
when the cycle edge between positions k and k+1 (mod n) points forward,
k -> k+1, and False when it points backward.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

from .errors import InputError, SelectionInfeasible
from .rng import stream

FORWARD_CHARS = "+"
BACKWARD_CHARS = "-−"


@dataclass(frozen=True)
class OrientationPattern:
    bits: tuple[bool, ...]

    def __post_init__(self):
        if len(self.bits) < 3:
            raise InputError("an oriented cycle needs at least 3 vertices")
        object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @property
    def n(self) -> int:
        return len(self.bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join("+" if b else "-" for b in self.bits)

    @classmethod
    def from_string(cls, text: str) -> "OrientationPattern":
        text = text.strip()
        out = []
        for ch in text:
            if ch in FORWARD_CHARS:
                out.append(True)
            elif ch in BACKWARD_CHARS:
                out.append(False)
            else:
                raise InputError(f"pattern characters must be '+' or '-', got {ch!r}")
        return cls(tuple(out))

    @classmethod
    def from_code(cls, code: int, n: int) -> "OrientationPattern":
        return cls(tuple(bool(code >> k & 1) for k in range(n)))

    @property
    def code(self) -> int:
        c = 0
        for k, b in enumerate(self.bits):
            if b:
                c |= 1 << k
        return c

    @classmethod
    def directed(cls, n: int) -> "OrientationPattern":
        return cls((True,) * n)

    @classmethod
    def anti_directed(cls, n: int) -> "OrientationPattern":
        if n % 2:
            raise InputError("an anti-directed cycle needs an even number of vertices")
        return cls(tuple(k % 2 == 0 for k in range(n)))

    @classmethod
    def random_with_changes(cls, n: int, changes: int, seed: int) -> "OrientationPattern":
        """Uniform pattern among those with exactly ``changes`` direction changes."""
        if changes % 2 or not (0 <= changes <= n) or (n % 2 and changes == n):
            raise InputError(f"cannot have {changes} direction changes on a cycle of length {n}")
        rng = stream(seed)
        where = set(int(x) for x in rng.choice(n, size=changes, replace=False)) if changes else set()
        cur = bool(rng.integers(2))
        out = [cur]
        for k in range(1, n):
            if k in where:
                cur = not cur
            out.append(cur)
        return cls(tuple(out))

    def rotate(self, r: int) -> "OrientationPattern":
        """Pattern read starting at position r."""
        r %= self.n
        return OrientationPattern(self.bits[r:] + self.bits[:r])

    def reverse_complement(self) -> "OrientationPattern":
        """Pattern of the same cycle traversed in the opposite direction."""
        return OrientationPattern(tuple(not b for b in reversed(self.bits)))

    @cached_property
    def direction_changes(self) -> int:
        b = self.bits
        return sum(1 for k in range(self.n) if b[k - 1] != b[k])

    def out_degree(self, pos: int) -> int:
        b = self.bits
        return int(b[pos % self.n]) + int(not b[(pos - 1) % self.n])

    def out_degrees(self) -> tuple[int, ...]:
        b = self.bits
        return tuple(int(b[k]) + int(not b[k - 1]) for k in range(self.n))

    def canonical(self) -> "OrientationPattern":
        return OrientationPattern.from_string(canonical_string(self))

    def edge(self, pos: int, images: tuple[int, int]) -> tuple[int, int]:
        """Directed edge realising pattern edge ``pos`` when positions pos, pos+1 map to ``images``."""
        a, b = images
        return (a, b) if self.bits[pos % self.n] else (b, a)


def direction_changes(C: OrientationPattern) -> int:
    """Number of sinks plus sources of the cycle."""
    return C.direction_changes


lambda_ = direction_changes


def p_threshold(C: OrientationPattern, n: int | None = None) -> float:
    """Containment threshold for the pattern in D(n, p)."""
    n = C.n if n is None else n
    lam = C.direction_changes
    ln = math.log(n)
    if lam == 0:
        return ln / n
    return max(ln, 2.0 * (ln - math.log(lam))) / (2.0 * n)


def out_degree_profile(C: OrientationPattern) -> tuple[int, int, int]:
    counts = [0, 0, 0]
    for d in C.out_degrees():
        counts[d] += 1
    return tuple(counts)


def canonical_string(C: OrientationPattern) -> str:
    s = str(C)
    t = str(C.reverse_complement())
    n = len(s)
    return min(min(x[r:] + x[:r] for r in range(n)) for x in (s, t))


def canonical_classes(n: int) -> list[OrientationPattern]:
    """One representative per class under rotation and reversed traversal, sorted."""
    if n < 3:
        raise InputError("patterns need n >= 3")
    seen = set()
    for code in range(1 << n):
        s = "".join("+" if code >> k & 1 else "-" for k in range(n))
        seen.add(canonical_string(OrientationPattern.from_string(s)))
    return [OrientationPattern.from_string(s) for s in sorted(seen)]


def parse_pattern(spec: str) -> OrientationPattern:
    """Parse a literal '+-' string or a shorthand such as ``anti:10``."""
    spec = spec.strip()
    if ":" in spec:
        kind, *rest = spec.split(":")
        try:
            nums = [int(x) for x in rest]
        except ValueError:
            raise InputError(f"bad pattern shorthand {spec!r}") from None
        if kind == "directed" and len(nums) == 1:
            return OrientationPattern.directed(nums[0])
        if kind == "anti" and len(nums) == 1:
            return OrientationPattern.anti_directed(nums[0])
        if kind == "random" and len(nums) == 3:
            return OrientationPattern.random_with_changes(*nums)
        raise InputError(f"bad pattern shorthand {spec!r}")
    return OrientationPattern.from_string(spec)


def load_pattern(path) -> OrientationPattern:
    with open(path, encoding="utf-8") as fh:
        return OrientationPattern.from_string(fh.readline())


def dump_pattern(C: OrientationPattern, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(str(C) + "\n")


# ---------------------------------------------------------------------------
# landmark selection


@dataclass(frozen=True)
class LandmarkSelection:
    start: int
    length: int
    Z0: tuple[int, ...]
    Z1: tuple[int, ...]
    Z2: tuple[int, ...]
    spacing: int
    case: str = ""
    window_rule: str = ""
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def n_positions(self) -> int:
        return self.length + 1

    def positions(self, n: int) -> list[int]:
        return [(self.start + t) % n for t in range(self.length + 1)]

    def offset(self, pos: int, n: int) -> int:
        return (pos - self.start) % n

    def all_landmarks(self) -> tuple[int, ...]:
        return self.Z0 + self.Z1 + self.Z2

    def problems(self, C: OrientationPattern, max_length: int | None = None) -> list[str]:
        n = C.n
        out = []
        if max_length is not None and self.length > max_length:
            out.append(f"window length {self.length} exceeds {max_length}")
        degs = C.out_degrees()
        offs = []
        for j, Z in enumerate((self.Z0, self.Z1, self.Z2)):
            for p in Z:
                o = self.offset(p, n)
                if o > self.length:
                    out.append(f"position {p} outside window")
                if degs[p % n] != j:
                    out.append(f"position {p} has out-degree {degs[p % n]}, expected {j}")
                offs.append(o)
        offs.sort()
        for a, b in zip(offs, offs[1:]):
            if b - a < self.spacing:
                out.append(f"landmarks at offsets {a},{b} closer than {self.spacing}")
        return out


def default_spacing(n: int) -> int:
    return math.ceil(100 * math.log(n) / math.log(math.log(n)))


def default_mu(C: OrientationPattern) -> tuple[int, int]:
    """(mu0 + mu2, mu1) from the count of out-degree-0 positions."""
    n = C.n
    if n < 16:
        raise InputError("default landmark counts need n >= 16; pass them explicitly")
    lam = out_degree_profile(C)[0]
    ln = math.log(n)
    return math.ceil(2 * lam / ln), math.ceil((n - 2 * lam) / ln)


def _balanced_start(C: OrientationPattern, ell: int, classes: list[set[int]], lam: int,
                    mu0: int, mu2: int) -> tuple[int, str]:
    n = C.n
    ln = math.log(n)
    X0, X1, X2 = classes
    if lam == 0 or n - 2 * lam == 0:
        return 0, "any"
    if lam <= ln / 2:
        target = X2 if mu0 == 0 else X0
        p = min(target)
        return p, "contains-rare"
    if n - 2 * lam <= ln / 2:
        return min(X1), "contains-rare"
    ind = [1 if k in X1 else 0 for k in range(n)]
    window = sum(ind[k % n] for k in range(ell + 1))
    ratio = (n - 2 * lam) / n * (ell + 1)
    best, best_val = 0, None
    for i in range(n):
        f = ratio - window
        if abs(f) <= 1:
            return i, "balance"
        if best_val is None or abs(f) < best_val:
            best, best_val = i, abs(f)
        window += ind[(i + ell + 1) % n] - ind[i]
    return best, "balance-closest"


def _greedy(order, allowed_classes, quotas, chosen, spacing, degs):
    """Scan offsets left to right; take a position when its class has quota left."""
    taken = {j: [] for j in allowed_classes}
    picked_offsets = sorted(o for o, _ in chosen)

    for off, pos in order:
        j = degs[pos]
        if j not in allowed_classes or len(taken[j]) >= quotas[j]:
            continue
        i = bisect.bisect_left(picked_offsets, off)
        if i > 0 and off - picked_offsets[i - 1] < spacing:
            continue
        if i < len(picked_offsets) and picked_offsets[i] - off < spacing:
            continue
        picked_offsets.insert(i, off)
        taken[j].append(pos)
        chosen.append((off, pos))
    return taken


def _pick_in_window(C, start, ell, mu, spacing):
    n = C.n
    degs = C.out_degrees()
    order = [(t, (start + t) % n) for t in range(ell + 1)]
    chosen: list[tuple[int, int]] = []
    Z = {0: [], 1: [], 2: []}
    if mu[0] + mu[2] <= mu[1]:
        case = "I"
        Z.update(_greedy(order, (0, 2), mu, chosen, spacing, degs))
        Z.update(_greedy(order, (1,), mu, chosen, spacing, degs))
    else:
        case = "II"
        Z.update(_greedy(order, (1,), mu, chosen, spacing, degs))
        Z.update(_greedy(order, (0, 2), mu, chosen, spacing, degs))
    short = {j: mu[j] - len(Z[j]) for j in range(3) if len(Z[j]) < mu[j]}
    return Z, case, short


def select_landmarks(
    C: OrientationPattern,
    mu0: int | None = None,
    mu2: int | None = None,
    spacing_k: float | None = None,
    window_frac: float = 1 / 100,
    mu1: int | None = None,
    scan_windows: bool = True,
) -> LandmarkSelection:
    """Pick a short window of the cycle and well-spaced positions of each out-degree class.

    The window is first chosen so that its share of out-degree-1 positions
    matches the whole cycle to within one; landmarks are then taken greedily,
    smaller demand first.  With ``scan_windows`` the other windows are tried
    before giving up.
    """
    n = C.n
    if mu0 is None or mu2 is None or mu1 is None:
        tot02, d1 = default_mu(C)
        if mu1 is None:
            mu1 = d1
        if mu0 is None and mu2 is None:
            mu0, mu2 = (tot02 + 1) // 2, tot02 // 2
        elif mu0 is None:
            mu0 = max(tot02 - mu2, 0)
        elif mu2 is None:
            mu2 = max(tot02 - mu0, 0)
    if min(mu0, mu1, mu2) < 0:
        raise InputError("landmark counts must be non-negative")
    if spacing_k is None:
        if n < 16:
            raise InputError("default spacing needs n >= 16; pass spacing_k")
        spacing_k = default_spacing(n)
    spacing = max(1, math.ceil(spacing_k))
    ell = min(int(math.floor(n * window_frac)), n - 1)
    mu = {0: mu0, 1: mu1, 2: mu2}
    degs = C.out_degrees()
    classes = [set(k for k in range(n) if degs[k] == j) for j in range(3)]
    for j in range(3):
        if mu[j] > len(classes[j]):
            raise SelectionInfeasible(
                f"pattern has {len(classes[j])} positions of out-degree {j}, {mu[j]} requested",
                bound="class-size", out_degree=j)
    needed = mu0 + mu1 + mu2
    if needed and (needed - 1) * spacing > ell:
        raise SelectionInfeasible(
            f"{needed} landmarks spaced {spacing} apart need a window of length "
            f"{(needed - 1) * spacing}, only {ell} available",
            bound="window-length", needed=needed, spacing=spacing, window=ell)
    lam = len(classes[0])
    start, rule = _balanced_start(C, ell, classes, lam, mu0, mu2)
    Z, case, short = _pick_in_window(C, start, ell, mu, spacing)
    if short and scan_windows:
        for s in range(n):
            if s == start:
                continue
            Z2_, case2, short2 = _pick_in_window(C, s, ell, mu, spacing)
            if not short2:
                Z, case, short, start, rule = Z2_, case2, short2, s, "scan"
                break
    if short:
        raise SelectionInfeasible(
            f"case {case}: could not place landmarks, missing {short}",
            bound="greedy", case=case, missing=short, window=ell, spacing=spacing)
    sel = LandmarkSelection(
        start=start, length=ell,
        Z0=tuple(sorted(Z[0])), Z1=tuple(sorted(Z[1])), Z2=tuple(sorted(Z[2])),
        spacing=spacing, case=case, window_rule=rule,
        diagnostics={"mu": (mu0, mu1, mu2)},
    )
    return sel


def pattern_slice(C: OrientationPattern, start: int, length: int) -> tuple[bool, ...]:
    """Orientation bits of the path of ``length`` edges starting at position ``start``."""
    n = C.n
    return tuple(C.bits[(start + t) % n] for t in range(length))


def all_patterns_with_changes(n: int, lo: float, hi: float) -> Iterable[OrientationPattern]:
    for C in canonical_classes(n):
        if lo <= C.direction_changes <= hi:
            yield C
