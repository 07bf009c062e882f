"""Averaging windows: intervals, interval families, and their classification.

A ``WindowFamily`` is a sequence of integer-endpoint intervals ``[a(n), b(n)]``.
Interval sequences are van Hove exactly when the width tends to infinity; the
checks here are finite-horizon numerics, not proofs, and every report says so.
"""
from __future__ import annotations

import ast
import math
import operator
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .errors import BudgetExceeded, SpecError


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise SpecError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise SpecError(f"window endpoints must be finite, got {x!r}")
        return Fraction(repr(x))
    try:
        return Fraction(str(x))
    except (ValueError, ZeroDivisionError) as exc:
        raise SpecError(f"not a rational number: {x!r}") from exc


@dataclass(frozen=True)
class Interval:
    """Closed interval with rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))
        if self.hi < self.lo:
            raise SpecError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def intersect(self, other: "Interval") -> Optional["Interval"]:
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return Interval(lo, hi) if lo <= hi else None

    def reflect(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def int_bounds(self) -> tuple[int, int]:
        """Smallest and largest integers inside (may cross when no integer fits)."""
        return math.ceil(self.lo), math.floor(self.hi)

    def __str__(self):
        return f"[{self.lo}, {self.hi}]"


def interval(w) -> Interval:
    """Coerce ``Interval`` or a ``(lo, hi)`` pair."""
    if isinstance(w, Interval):
        return w
    lo, hi = w
    return Interval(lo, hi)


# -- safe arithmetic expressions over n ------------------------------------

def _pow(a: Fraction, b: Fraction) -> Fraction:
    if b.denominator != 1 or b < 0 or b > 4096:
        raise SpecError(f"exponent must be an integer in [0, 4096], got {b}")
    return a ** int(b)


def _factorial(x: Fraction) -> Fraction:
    if x.denominator != 1 or x < 0 or x > 1000:
        raise SpecError(f"factorial needs an integer in [0, 1000], got {x}")
    return Fraction(math.factorial(int(x)))


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.FloorDiv: lambda a, b: Fraction(a // b),
    ast.Mod: operator.mod,
    ast.Pow: _pow,
}
_FUNCS: dict[str, Callable] = {
    "factorial": _factorial,
    "floor": lambda x: Fraction(math.floor(x)),
    "ceil": lambda x: Fraction(math.ceil(x)),
    "abs": abs,
    "min": min,
    "max": max,
    "isqrt": lambda x: Fraction(math.isqrt(math.floor(x))),
}


def compile_expr(text: str) -> Callable[[int], Fraction]:
    """Compile an arithmetic expression in ``n`` without executing Python code."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise SpecError(f"malformed expression {text!r}: {exc.msg}") from exc

    def check(node):
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise SpecError(f"operator {type(node.op).__name__} not allowed in {text!r}")
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise SpecError(f"unary operator not allowed in {text!r}")
            check(node.operand)
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise SpecError(f"constant {node.value!r} not allowed in {text!r}")
        elif isinstance(node, ast.Name):
            if node.id != "n":
                raise SpecError(f"unknown name {node.id!r} in {text!r}; only n is available")
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS or node.keywords:
                raise SpecError(f"function call not allowed in {text!r}")
            for arg in node.args:
                check(arg)
        else:
            raise SpecError(f"syntax {type(node).__name__} not allowed in {text!r}")

    check(tree)

    def ev(node, n):
        if isinstance(node, ast.Expression):
            return ev(node.body, n)
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](ev(node.left, n), ev(node.right, n))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand, n)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Constant):
            return as_fraction(node.value)
        if isinstance(node, ast.Name):
            return Fraction(n)
        return _FUNCS[node.func.id](*(ev(a, n) for a in node.args))

    def f(n: int) -> Fraction:
        try:
            return Fraction(ev(tree, n))
        except ZeroDivisionError as exc:
            raise SpecError(f"division by zero evaluating {text!r} at n={n}") from exc

    return f


# -- families ----------------------------------------------------------------

@dataclass(frozen=True)
class WindowFamily:
    """Sequence of intervals ``[a(n), b(n)]`` with integer endpoints."""

    name: str
    a: Callable[[int], int] = field(compare=False)
    b: Callable[[int], int] = field(compare=False)
    description: str = ""
    spec: str = ""
    flipped: bool = False

    def endpoints(self, n: int) -> tuple[int, int]:
        return self.a(n), self.b(n)

    def __call__(self, n: int) -> Interval:
        a, b = self.endpoints(n)
        if b <= a:
            raise SpecError(f"window {self.name} at n={n} is degenerate: [{a}, {b}]")
        return Interval(a, b)

    def width(self, n: int) -> int:
        a, b = self.endpoints(n)
        return b - a


def builtin_family(name: str, params: Optional[dict] = None) -> WindowFamily:
    """Named window families.

    ``symmetric``: [-n, n]; ``ratio`` (L > 1): [n, ceil(L n)];
    ``anchored`` (d > 0): [ceil(d n), ceil(d n) + 2n], an interval drifting
    away from 0 at a speed proportional to its width; ``factorial_gap``:
    [n!, n! + n]; ``custom``: expressions ``a`` and ``b`` in n, with a
    rounded up and b rounded down to integers.
    """
    params = dict(params or {})
    key = name.replace("-", "_")
    if key == "symmetric":
        return WindowFamily("symmetric", lambda n: -n, lambda n: n, "[-n, n]", "symmetric")
    if key == "ratio":
        L = as_fraction(params.get("L", 2))
        if L <= 1:
            raise SpecError(f"ratio family needs L > 1, got {L}")
        return WindowFamily(
            "ratio", lambda n: n, lambda n: math.ceil(L * n), f"[n, ceil({L} n)]", f"ratio:L={L}"
        )
    if key == "anchored":
        d = as_fraction(params.get("d", 1))
        if d <= 0:
            raise SpecError(f"anchored family needs d > 0, got {d}")
        return WindowFamily(
            "anchored",
            lambda n: math.ceil(d * n),
            lambda n: math.ceil(d * n) + 2 * n,
            f"[ceil({d} n), ceil({d} n) + 2n]",
            f"anchored:d={d}",
        )
    if key == "factorial_gap":
        return WindowFamily(
            "factorial_gap",
            lambda n: math.factorial(n),
            lambda n: math.factorial(n) + n,
            "[n!, n! + n]",
            "factorial-gap",
        )
    if key == "custom":
        if "a" not in params or "b" not in params:
            raise SpecError("custom family needs expressions a and b")
        fa, fb = compile_expr(str(params["a"])), compile_expr(str(params["b"]))
        return WindowFamily(
            "custom",
            lambda n: math.ceil(fa(n)),
            lambda n: math.floor(fb(n)),
            f"[ceil({params['a']}), floor({params['b']})]",
            f"custom:a={params['a']},b={params['b']}",
        )
    raise SpecError(f"unknown window family {name!r}")


def parse_window(flag: str) -> WindowFamily:
    """Parse ``symmetric | ratio:L=2 | anchored:d=1 | factorial-gap | custom:a=<expr>,b=<expr>``."""
    flag = flag.strip()
    name, _, rest = flag.partition(":")
    if name == "custom":
        m = re.fullmatch(r"\s*a\s*=(.*),\s*b\s*=(.*)", rest)
        if not m:
            raise SpecError(f"custom window must look like custom:a=<expr>,b=<expr>, got {flag!r}")
        return builtin_family("custom", {"a": m.group(1), "b": m.group(2)})
    params = {}
    for item in filter(None, rest.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise SpecError(f"bad window parameter {item!r} in {flag!r}")
        params[k.strip()] = v.strip()
    return builtin_family(name, params)


# -- checks ----------------------------------------------------------------

@dataclass(frozen=True)
class VanHoveCheck:
    ok: bool
    witness: Optional[int]
    reason: str
    horizon: int


def verify_van_hove(family: WindowFamily, horizon: int) -> VanHoveCheck:
    """Finite-horizon check that widths grow without bound.

    Every window on ``1..horizon`` must be a proper interval, and on the
    tail ``horizon//2..horizon`` the width must be nondecreasing and end
    strictly above where it started. Otherwise the first violating n is
    returned as witness.
    """
    if horizon < 2:
        raise SpecError(f"horizon must be >= 2, got {horizon}")
    widths = {}
    for n in range(1, horizon + 1):
        a, b = family.endpoints(n)
        if b <= a:
            return VanHoveCheck(False, n, f"degenerate interval [{a}, {b}]", horizon)
        widths[n] = b - a
    start = max(1, horizon // 2)
    for n in range(start + 1, horizon + 1):
        if widths[n] < widths[n - 1]:
            return VanHoveCheck(False, n, f"width decreases from {widths[n - 1]} to {widths[n]}", horizon)
    if widths[horizon] <= widths[start]:
        witness = next(n for n in range(start + 1, horizon + 1) if widths[n] <= widths[start])
        if len({widths[n] for n in range(start, horizon + 1)}) == 1:
            reason = f"width constant {widths[start]}"
        else:
            reason = f"width does not grow past {widths[start]}"
        return VanHoveCheck(False, witness, reason, horizon)
    return VanHoveCheck(True, None, "width nondecreasing and growing on the tail (numeric check)", horizon)


@dataclass(frozen=True)
class WindowClassification:
    family: str
    horizon: int
    contains_zero_eventually: bool
    ratio_bound: Optional[Fraction]
    anchored_bound: Optional[int]
    predicted_prime_regime: str  # lebesgue | degenerate | unknown
    max_primes_per_window: Optional[int] = None
    heuristic: bool = True
    notes: tuple = ()

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "horizon": self.horizon,
            "contains_zero_eventually": self.contains_zero_eventually,
            "ratio_bound": None if self.ratio_bound is None else str(self.ratio_bound),
            "anchored_bound": self.anchored_bound,
            "predicted_prime_regime": self.predicted_prime_regime,
            "max_primes_per_window": self.max_primes_per_window,
            "heuristic": self.heuristic,
            "notes": list(self.notes),
        }


DEGENERACY_WIDTH_LIMIT = 10**6


def classify(family: WindowFamily, horizon: int) -> WindowClassification:
    """Check each hypothesis of the prime theorems on the tail of the horizon.

    Certificates are verified exhaustively on ``horizon//2..horizon``. The
    tail heuristic for the ratio and anchored certificates: the certified
    quantity must not be drifting toward its boundary, i.e. its extreme over
    the last quarter of the horizon is no worse than over the third quarter.
    """
    if horizon < 10:
        raise SpecError(f"horizon {horizon} too small to certify anything (need >= 10)")
    tail = range(horizon // 2, horizon + 1)
    q3 = range(horizon // 2, (3 * horizon) // 4)
    q4 = range((3 * horizon) // 4, horizon + 1)
    ends = {n: family.endpoints(n) for n in tail}
    notes = ["finite-horizon numeric check; eventual behaviour is extrapolated"]

    contains_zero = all(a <= 0 <= b for a, b in ends.values())

    ratio_bound = None
    if all(a > 0 for a, _ in ends.values()):
        r = {n: Fraction(b, a) for n, (a, b) in ends.items()}
        c = min(r.values())
        if c > 1 and min(r[n] for n in q4) >= min(r[n] for n in q3):
            ratio_bound = c

    anchored_bound = None
    q = {n: Fraction(abs(a), b - a) for n, (a, b) in ends.items()}
    if max(q[n] for n in q4) <= max(q[n] for n in q3):
        anchored_bound = math.floor(max(q.values())) + 1
        assert all(abs(a) < anchored_bound * (b - a) for a, b in ends.values())

    max_per_window = None
    if contains_zero or ratio_bound is not None or anchored_bound is not None:
        regime = "lebesgue"
    else:
        regime = "unknown"
        max_per_window = _max_primes_per_window(ends)
        if max_per_window is not None and max_per_window <= 1:
            regime = "degenerate"
            notes.append(f"at most {max_per_window} prime per window on n in [{tail.start}, {horizon}]")
    return WindowClassification(
        family.spec or family.name,
        horizon,
        contains_zero,
        ratio_bound,
        anchored_bound,
        regime,
        max_per_window,
        True,
        tuple(notes),
    )


def _max_primes_per_window(ends: dict) -> Optional[int]:
    from .primes import signed_primes

    worst = 0
    try:
        for a, b in ends.values():
            if b - a > DEGENERACY_WIDTH_LIMIT:
                return None
            worst = max(worst, len(signed_primes(a, b)))
    except BudgetExceeded:
        return None
    return worst


def flip_normalize(family: WindowFamily) -> WindowFamily:
    """Reflect each interval with ``|a| > |b|`` so that ``|b| >= |a|`` for all n."""
    if family.flipped:
        return family

    def ends(n):
        a, b = family.endpoints(n)
        return (-b, -a) if abs(a) > abs(b) else (a, b)

    return WindowFamily(
        family.name,
        lambda n: ends(n)[0],
        lambda n: ends(n)[1],
        family.description + " (flip-normalized)",
        family.spec,
        True,
    )
