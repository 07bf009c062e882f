"""Point sets on the real line, generated exactly inside a window.

Coordinates are stored as a sorted int64 array of numerators over a common
denominator ``scale``: ``scale == 1`` for integer sets, a power of two for
dyadic sets, and float64 values (``mode == "real"``) otherwise.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Union

import numpy as np

from . import primes as _primes
from .errors import BudgetExceeded, SpecError
from .windows import Interval, as_fraction, interval

DEFAULT_BUDGET = 50_000_000
# keeps pairwise differences inside int64
INT_SAFE = 2**62

INTEGER, DYADIC, REAL = "integer", "dyadic", "real"


@dataclass(frozen=True, eq=False)
class PointSet:
    kind: str
    values: np.ndarray
    mode: str = INTEGER
    scale: int = 1
    weights: Optional[np.ndarray] = None
    window: Optional[Interval] = None

    def __post_init__(self):
        v = self.values
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise ValueError("PointSet values must be strictly increasing")
        if self.weights is not None and self.weights.shape != v.shape:
            raise ValueError("weights must match values")

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def card(self) -> int:
        return len(self)

    @property
    def is_weighted(self) -> bool:
        return self.weights is not None

    @property
    def exact(self) -> bool:
        return self.mode != REAL

    def points(self) -> list:
        """Coordinates as ints, Fractions (dyadic) or floats."""
        if self.mode == INTEGER:
            return self.values.tolist()
        if self.mode == DYADIC:
            return [Fraction(v, self.scale) for v in self.values.tolist()]
        return self.values.tolist()

    def weight_list(self) -> list:
        return [1] * len(self) if self.weights is None else self.weights.tolist()

    def restrict(self, window) -> "PointSet":
        w = interval(window)
        if self.window is not None:
            w = self.window.intersect(w)
        if w is None:
            return self._take(np.zeros(0, dtype=bool), None)
        if self.mode == REAL:
            lo, hi = float(w.lo), float(w.hi)
        else:
            lo, hi = math.ceil(w.lo * self.scale), math.floor(w.hi * self.scale)
        keep = (self.values >= lo) & (self.values <= hi)
        return self._take(keep, w)

    def _take(self, keep, w) -> "PointSet":
        wts = None if self.weights is None else self.weights[keep]
        return PointSet(self.kind, self.values[keep], self.mode, self.scale, wts, w)

    def negate(self) -> "PointSet":
        wts = None if self.weights is None else self.weights[::-1].copy()
        w = None if self.window is None else self.window.reflect()
        return PointSet(self.kind, -self.values[::-1], self.mode, self.scale, wts, w)

    def same_points(self, other: "PointSet") -> bool:
        """Equality of the coordinate sets and weights (window metadata ignored)."""
        if len(self) != len(other) or (self.mode == REAL) != (other.mode == REAL):
            return False
        if self.mode == REAL:
            same = np.array_equal(self.values, other.values)
        else:
            a = [v * other.scale for v in self.values.tolist()]
            b = [v * self.scale for v in other.values.tolist()]
            same = a == b
        if not same or self.is_weighted != other.is_weighted:
            return False
        return self.weights is None or np.array_equal(self.weights, other.weights)


def empty(kind: str, mode: str = INTEGER, window=None, weighted: bool = False) -> PointSet:
    dtype = np.float64 if mode == REAL else np.int64
    wts = np.zeros(0) if weighted else None
    return PointSet(kind, np.zeros(0, dtype=dtype), mode, 1, wts, window)


def from_points(points: Iterable, kind: str = "explicit", weights=None) -> PointSet:
    """Build a PointSet from ints, dyadic Fractions or floats (deduplicated, sorted)."""
    pts = list(points)
    if weights is not None:
        pairs = sorted(dict(zip(pts, weights)).items())
        pts = [p for p, _ in pairs]
        wts = np.array([float(w) for _, w in pairs])
    else:
        pts = sorted(set(pts))
        wts = None
    if all(isinstance(p, (int, np.integer)) for p in pts):
        return PointSet(kind, np.array(pts, dtype=np.int64), INTEGER, 1, wts)
    if all(isinstance(p, (int, np.integer, Fraction)) for p in pts):
        fr = [Fraction(p) for p in pts]
        scale = max(f.denominator for f in fr)
        if scale & (scale - 1):
            raise SpecError("exact non-integer points must be dyadic rationals")
        nums = [int(f * scale) for f in fr]
        return PointSet(kind, np.array(nums, dtype=np.int64), DYADIC, scale, wts)
    return PointSet(kind, np.array([float(p) for p in pts], dtype=np.float64), REAL, 1, wts)


# -- generator specs -------------------------------------------------------

@dataclass
class GeneratorSpec:
    name: str
    params: dict = field(default_factory=dict)

    @classmethod
    def parse(cls, text: str) -> "GeneratorSpec":
        """Parse ``name`` or ``name:key=value,...``; ``base.*`` keys go to a nested base spec."""
        name, _, rest = text.strip().partition(":")
        name = name.strip().replace("-", "_")
        params: dict = {}
        base_params: dict = {}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            k, eq, v = item.partition("=")
            if not eq:
                raise SpecError(f"bad generator parameter {item!r} in {text!r}")
            k = k.strip()
            if k.startswith("base."):
                base_params[k[5:]] = _literal(v.strip())
            else:
                params[k] = _literal(v.strip())
        if "base" in params:
            params["base"] = cls(str(params["base"]).replace("-", "_"), base_params)
        elif base_params:
            raise SpecError(f"base.* parameters given without base in {text!r}")
        return cls(name, params)

    def __str__(self):
        if not self.params:
            return self.name
        parts = []
        for k, v in self.params.items():
            if isinstance(v, GeneratorSpec):
                parts.append(f"base={v.name}")
                parts.extend(f"base.{bk}={bv}" for bk, bv in v.params.items())
            else:
                parts.append(f"{k}={v}")
        return f"{self.name}:{','.join(parts)}"


def _literal(v: str):
    low = v.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return Fraction(v)
    except ValueError:
        return v


Source = Union[GeneratorSpec, Callable[[Interval], PointSet]]


def sample(source: Source, window) -> PointSet:
    """``source ∩ window`` for a generator spec or any callable window -> PointSet."""
    if isinstance(source, GeneratorSpec):
        return generate(source, window)
    if isinstance(source, str):
        return generate(GeneratorSpec.parse(source), window)
    return source(interval(window))


def _check_budget(what: str, count: int, budget: int):
    if count > budget:
        raise BudgetExceeded(what, count, budget)


def _int_set(kind, vals, w) -> PointSet:
    return PointSet(kind, np.asarray(vals, dtype=np.int64), INTEGER, 1, None, w)


def _sparse_integers(kind: str, seq: Iterable[int], w: Interval) -> PointSet:
    lo, hi = w.int_bounds()
    out = []
    for v in seq:
        if v > hi:
            break
        if abs(v) > INT_SAFE:
            raise BudgetExceeded(f"{kind} coordinate magnitude", abs(v), INT_SAFE)
        if v >= lo:
            out.append(v)
    return _int_set(kind, sorted(set(out)), w)


def _factorial_seq():
    v, k = 1, 1
    while True:
        yield v
        k += 1
        v *= k


def _fibonacci_seq():
    # f_1 = 1, f_2 = 1, ... ; the duplicate 1 collapses in the set
    a, b = 1, 1
    while True:
        yield a
        a, b = b, a + b


def _gen_integers(p, w, budget):
    lo, hi = w.int_bounds()
    _check_budget("integers in window", max(0, hi - lo + 1), budget)
    return _int_set("integers", np.arange(lo, hi + 1, dtype=np.int64), w)


def _gen_arithmetic(p, w, budget):
    step = int(p.get("step", 1))
    offset = int(p.get("offset", 0))
    if step < 1:
        raise SpecError(f"arithmetic step must be >= 1, got {step}")
    lo, hi = w.int_bounds()
    first = lo + (offset - lo) % step
    _check_budget("arithmetic progression in window", max(0, (hi - first) // step + 1), budget)
    return _int_set("arithmetic", np.arange(first, hi + 1, step, dtype=np.int64), w)


def _gen_primes(p, w, budget):
    lo, hi = w.int_bounds()
    signed = p.get("signed", True)
    vals = _primes.signed_primes(lo, hi) if signed else _primes.primes_in(max(lo, 0), hi)
    _check_budget("primes in window", len(vals), budget)
    return _int_set("primes", vals, w)


def _gen_prime_powers(p, w, budget):
    lo, hi = w.int_bounds()
    vals = _primes.signed_prime_powers(lo, hi)
    if not p.get("signed", True):
        vals = vals[vals > 0]
    _check_budget("prime powers in window", len(vals), budget)
    return _int_set("prime_powers", vals, w)


def _gen_twin_primes(p, w, budget):
    d = int(p.get("d", 2))
    lo, hi = w.int_bounds()
    vals = _primes.twin_values(d, lo, hi)
    _check_budget("twin primes in window", len(vals), budget)
    return _int_set("twin_primes", vals, w)


def _gen_factorials(p, w, budget):
    return _sparse_integers("factorials", _factorial_seq(), w)


def _gen_fibonacci(p, w, budget):
    return _sparse_integers("fibonacci", _fibonacci_seq(), w)


def _gen_geometric(p, w, budget):
    a = as_fraction(p.get("a", 2))
    if a <= 1:
        raise SpecError(f"geometric ratio must be > 1, got {a}")
    if a.denominator == 1:
        a = int(a)
        return _sparse_integers("geometric", (a**k for k in range(1, 10**6)), w)
    out, k = [], 1
    while True:
        v = a**k
        if v > w.hi:
            break
        if v >= w.lo:
            out.append(float(v))
        k += 1
    return PointSet("geometric", np.array(sorted(set(out)), dtype=np.float64), REAL, 1, None, w)


def _gen_shift_union(p, w, budget):
    base = _base_spec(p)
    k = p.get("k")
    if not isinstance(k, int) or k == 0:
        raise SpecError(f"shift_union needs a nonzero integer k, got {k!r}")
    a = generate(base, w, budget)
    b = generate(base, Interval(w.lo - k, w.hi - k), budget)
    if a.mode == REAL or a.is_weighted:
        raise SpecError("shift_union needs an unweighted exact base")
    scale = max(a.scale, b.scale)
    av = a.values * (scale // a.scale)
    bv = b.values * (scale // b.scale) + k * scale
    vals = np.union1d(av, bv)
    _check_budget("shift union in window", len(vals), budget)
    return PointSet("shift_union", vals, a.mode, scale, None, w)


def _gen_embed_factorial(p, w, budget):
    return embed_factorial(_base_spec(p), p.get("max_block"), w, budget=budget)


def _gen_substitution(p, w, budget):
    system = str(p.get("system", "thue_morse")).replace("-", "_")
    letter = str(p.get("letter", "a"))
    lo, hi = w.int_bounds()
    _check_budget("substitution positions in window", max(0, hi - lo + 1), budget)
    idx = np.arange(lo, hi + 1, dtype=np.int64)
    keep = _letter_mask(system, letter, idx)
    return _int_set(f"substitution_{system}", idx[keep], w)


def _gen_dyadic(p, w, budget):
    return dyadic_pathological(p.get("max_m"), w, budget=budget)


def _gen_harmonic(p, w, budget):
    return weighted_harmonic_comb(w, budget=budget)


GENERATORS: dict[str, Callable] = {
    "integers": _gen_integers,
    "arithmetic": _gen_arithmetic,
    "primes": _gen_primes,
    "prime_powers": _gen_prime_powers,
    "twin_primes": _gen_twin_primes,
    "factorials": _gen_factorials,
    "fibonacci": _gen_fibonacci,
    "geometric": _gen_geometric,
    "shift_union": _gen_shift_union,
    "embed_factorial": _gen_embed_factorial,
    "substitution_positions": _gen_substitution,
    "dyadic_pathological": _gen_dyadic,
    "weighted_harmonic_comb": _gen_harmonic,
}


def _base_spec(p) -> GeneratorSpec:
    base = p.get("base")
    if base is None:
        raise SpecError("generator needs a base")
    if isinstance(base, str):
        base = GeneratorSpec.parse(base)
    return base


def generate(spec: GeneratorSpec, window, budget: int = DEFAULT_BUDGET) -> PointSet:
    """Exactly ``Λ ∩ window`` for the set named by ``spec``."""
    if isinstance(spec, str):
        spec = GeneratorSpec.parse(spec)
    gen = GENERATORS.get(spec.name)
    if gen is None:
        raise SpecError(f"unknown generator {spec.name!r}; known: {', '.join(sorted(GENERATORS))}")
    return gen(spec.params, interval(window), budget)


# -- named constructions ---------------------------------------------------

FACTORIAL_START = 3
MAX_FACTORIAL_BLOCK = 20  # 20! + 20 < 2**62


def embed_factorial(base: Source, max_block: Optional[int], window, budget: int = DEFAULT_BUDGET) -> PointSet:
    """``(⋃_{n=3}^{max_block} n! + (Λ ∩ [-n, n])) ∩ window``.

    With ``max_block=None`` every block that can meet the window is used.
    """
    w = interval(window)
    if max_block is not None and max_block < FACTORIAL_START:
        raise SpecError(f"max_block must be >= {FACTORIAL_START}, got {max_block}")
    last = max_block
    if last is None:
        last = FACTORIAL_START
        while math.factorial(last + 1) - (last + 1) <= w.hi:
            last += 1
            if last > MAX_FACTORIAL_BLOCK:
                break
    if last > MAX_FACTORIAL_BLOCK and math.factorial(MAX_FACTORIAL_BLOCK + 1) - MAX_FACTORIAL_BLOCK - 1 <= w.hi:
        raise BudgetExceeded("factorial block index", last, MAX_FACTORIAL_BLOCK)
    last = min(last, MAX_FACTORIAL_BLOCK)
    blocks = []
    total = 0
    for n in range(FACTORIAL_START, last + 1):
        f = math.factorial(n)
        # blocks are pairwise disjoint: n! + n < (n+1)! - (n+1)
        assert f + n < math.factorial(n + 1) - (n + 1)
        if f + n < w.lo or f - n > w.hi:
            continue
        part = sample(base, Interval(-n, n))
        if part.mode != INTEGER or part.is_weighted:
            raise SpecError("embed_factorial needs an unweighted integer base")
        vals = part.values + f
        vals = vals[(vals >= math.ceil(w.lo)) & (vals <= math.floor(w.hi))]
        total += len(vals)
        _check_budget("factorial embedding in window", total, budget)
        blocks.append(vals)
    vals = np.concatenate(blocks) if blocks else np.zeros(0, dtype=np.int64)
    return _int_set("embed_factorial", vals, w)


SUBSTITUTIONS = ("thue_morse", "rudin_shapiro")


def _letter_mask(system: str, letter: str, idx: np.ndarray) -> np.ndarray:
    if system not in SUBSTITUTIONS:
        raise SpecError(f"unsupported substitution system {system!r}; choose from {SUBSTITUTIONS}")
    if letter not in ("a", "b"):
        raise SpecError(f"letter must be 'a' or 'b', got {letter!r}")
    # two-sided extension by reflection about -1/2: x_{-j} = x_{j-1}
    i = np.where(idx < 0, -idx - 1, idx).astype(np.uint64)
    if system == "thue_morse":
        odd = np.bitwise_count(i) % 2 == 1
    else:
        # Rudin-Shapiro sign: (-1)^(number of '11' blocks in binary i)
        odd = np.bitwise_count(i & (i >> np.uint64(1))) % 2 == 1
    return ~odd if letter == "a" else odd


def substitution_positions(system: str, letter: str, prefix_length: int) -> PointSet:
    """0-based positions of ``letter`` among the first ``prefix_length`` symbols of the fixed point.

    Thue-Morse is the fixed point of a -> ab, b -> ba starting at a. For
    Rudin-Shapiro, letter a stands for the value +1 of the binary sequence.
    """
    if prefix_length < 1:
        raise SpecError(f"prefix_length must be >= 1, got {prefix_length}")
    system = system.replace("-", "_")
    idx = np.arange(prefix_length, dtype=np.int64)
    keep = _letter_mask(system, letter, idx)
    return _int_set(f"substitution_{system}", idx[keep], Interval(0, prefix_length - 1))


MAX_DYADIC_M = 20


def dyadic_pathological(max_m: Optional[int], window, budget: int = DEFAULT_BUDGET) -> PointSet:
    """``⋃_{m=1}^{max_m} {4^m - j/2^(m+1) : 1 <= j <= 2^m}`` inside the window, exactly.

    Block m lies in ``[4^m - 1/2, 4^m)``. With ``max_m=None`` all blocks that
    can meet the window are used.
    """
    w = interval(window)
    if max_m is not None and max_m < 1:
        raise SpecError(f"max_m must be >= 1, got {max_m}")
    top = max_m
    if top is None:
        top = 0
        while Fraction(4 ** (top + 1)) - Fraction(1, 2) <= w.hi:
            top += 1
            if top > MAX_DYADIC_M:
                raise BudgetExceeded("dyadic block index", top, MAX_DYADIC_M)
    if top > MAX_DYADIC_M:
        raise BudgetExceeded("dyadic block index", top, MAX_DYADIC_M)
    if top == 0:
        return PointSet("dyadic_pathological", np.zeros(0, dtype=np.int64), DYADIC, 2, None, w)
    scale = 2 ** (top + 1)
    lo, hi = math.ceil(w.lo * scale), math.floor(w.hi * scale)
    blocks, total = [], 0
    for m in range(1, top + 1):
        j = np.arange(2**m, 0, -1, dtype=np.int64)
        nums = 4**m * scale - j * (scale // 2 ** (m + 1))
        nums = nums[(nums >= lo) & (nums <= hi)]
        total += len(nums)
        _check_budget("dyadic points in window", total, budget)
        blocks.append(nums)
    return PointSet("dyadic_pathological", np.concatenate(blocks), DYADIC, scale, None, w)


def weighted_harmonic_comb(window, budget: int = DEFAULT_BUDGET) -> PointSet:
    """Points ``n >= 1`` in the window with weight ``1/n``."""
    w = interval(window)
    lo, hi = w.int_bounds()
    lo = max(lo, 1)
    _check_budget("harmonic comb points", max(0, hi - lo + 1), budget)
    vals = np.arange(lo, hi + 1, dtype=np.int64)
    return PointSet("weighted_harmonic_comb", vals, INTEGER, 1, 1.0 / vals.astype(np.float64), w)


# -- CSV -------------------------------------------------------------------

def format_float(x: float) -> str:
    return "%.17g" % x


def format_dyadic(num: int, scale: int) -> str:
    """Exact decimal expansion of ``num / scale`` for a power-of-two ``scale``."""
    e = scale.bit_length() - 1
    sign = "-" if num < 0 else ""
    digits = str(abs(num) * 5**e).rjust(e + 1, "0")
    whole, frac = digits[: len(digits) - e] if e else digits, digits[len(digits) - e :] if e else ""
    frac = frac.rstrip("0")
    return f"{sign}{whole}.{frac}" if frac else f"{sign}{whole}"


def format_coordinate(ps: PointSet, v) -> str:
    if ps.mode == INTEGER:
        return str(int(v))
    if ps.mode == DYADIC:
        return format_dyadic(int(v), ps.scale)
    return format_float(float(v))


def write_csv(ps: PointSet, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    if ps.is_weighted:
        writer.writerow(["x", "w"])
        for v, wt in zip(ps.values.tolist(), ps.weights.tolist()):
            writer.writerow([format_coordinate(ps, v), format_float(wt)])
    else:
        writer.writerow(["x"])
        for v in ps.values.tolist():
            writer.writerow([format_coordinate(ps, v)])


def to_csv(ps: PointSet) -> str:
    buf = io.StringIO()
    write_csv(ps, buf)
    return buf.getvalue()


def read_csv(stream, kind: str = "csv") -> PointSet:
    rows = list(csv.reader(stream))
    if not rows or rows[0] not in (["x"], ["x", "w"]):
        raise SpecError("point CSV needs header 'x' or 'x,w'")
    body = rows[1:]

    def parse(s: str):
        if any(c in s for c in "eE") or s.lower() in ("nan", "inf", "-inf"):
            return float(s)
        return int(s) if "." not in s else Fraction(s)

    pts = [parse(r[0]) for r in body]
    if any(isinstance(p, Fraction) and p.denominator & (p.denominator - 1) for p in pts):
        pts = [float(p) for p in pts]
    weights = [float(r[1]) for r in body] if rows[0] == ["x", "w"] else None
    return from_points(pts, kind, weights)
