"""Prime kernels: segmented sieve, pi(x), shifted-pair counts pi_d(x), twin sets.

Everything here is exact integer arithmetic. Ranges up to ``Sieve.limit``
(10**9 by default) are sieved in cached segments of 2**20 integers; short
ranges above the limit fall back to a deterministic Miller-Rabin test.
"""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

import numpy as np

from .errors import BudgetExceeded, SpecError

SEGMENT = 1 << 20
DEFAULT_LIMIT = 10**9
MR_WIDTH_BUDGET = 10**5
# Miller-Rabin with the first 13 prime bases is exact below this bound.
MR_EXACT_BELOW = 3_317_044_064_679_887_385_961_981
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)


def _simple_sieve(n: int) -> np.ndarray:
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    is_p = np.ones(n + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, isqrt(n) + 1):
        if is_p[p]:
            is_p[p * p :: p] = False
    return np.flatnonzero(is_p).astype(np.int64)


def miller_rabin(n: int) -> bool:
    """Deterministic primality test, exact for n < 3.3e24."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    if n >= MR_EXACT_BELOW:
        raise BudgetExceeded("deterministic primality range", n, MR_EXACT_BELOW - 1)
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


class Sieve:
    """Segmented Eratosthenes sieve with a thread-safe segment cache.

    Segments cover ``[k*SEGMENT, (k+1)*SEGMENT)`` and are immutable once
    built; only the most recent ``cache_segments`` masks are retained, but
    per-segment prime counts are kept forever so ``pi`` stays cheap.
    """

    def __init__(self, limit: int = DEFAULT_LIMIT, cache_segments: int = 32):
        self.limit = limit
        self.cache_segments = cache_segments
        self._lock = threading.RLock()
        self._base = np.zeros(0, dtype=np.int64)
        self._base_upto = 1
        self._segments: OrderedDict[int, np.ndarray] = OrderedDict()
        self._counts: dict[int, int] = {}

    def base_primes(self, upto: int) -> np.ndarray:
        with self._lock:
            if upto > self._base_upto:
                self._base_upto = max(upto, 2 * self._base_upto, 1 << 16)
                self._base = _simple_sieve(self._base_upto)
            return self._base[: np.searchsorted(self._base, upto, side="right")]

    def _mark(self, lo: int, hi: int) -> np.ndarray:
        width = hi - lo + 1
        seg = np.ones(width, dtype=bool)
        if lo <= 1:
            seg[: min(2 - lo, width)] = False
        base = self.base_primes(isqrt(hi))
        split = np.searchsorted(base, width)
        for p in base[:split].tolist():
            start = max(p * p, -(-lo // p) * p)
            if start <= hi:
                seg[start - lo :: p] = False
        big = base[split:]
        if big.size:
            # p >= width: at most one multiple of p lands in the range
            starts = np.maximum(big * big, -(-lo // big) * big)
            starts = starts[starts <= hi]
            seg[starts - lo] = False
        return seg

    def _segment(self, k: int) -> np.ndarray:
        with self._lock:
            seg = self._segments.get(k)
            if seg is not None:
                self._segments.move_to_end(k)
                return seg
        seg = self._mark(k * SEGMENT, (k + 1) * SEGMENT - 1)
        seg.setflags(write=False)
        with self._lock:
            self._segments[k] = seg
            self._counts[k] = int(np.count_nonzero(seg))
            while len(self._segments) > self.cache_segments:
                self._segments.popitem(last=False)
        return seg

    def _segment_count(self, k: int) -> int:
        with self._lock:
            c = self._counts.get(k)
        if c is None:
            self._segment(k)
            with self._lock:
                c = self._counts[k]
        return c

    def mask(self, lo: int, hi: int) -> np.ndarray:
        """Boolean primality mask for the integers ``lo..hi`` (``lo >= 0``)."""
        if lo < 0:
            raise SpecError(f"mask needs lo >= 0, got {lo}")
        if hi < lo:
            return np.zeros(0, dtype=bool)
        if hi > self.limit:
            width = hi - lo + 1
            if width > MR_WIDTH_BUDGET:
                raise BudgetExceeded(f"primality range above sieve limit {self.limit}", width, MR_WIDTH_BUDGET)
            return np.fromiter((miller_rabin(v) for v in range(lo, hi + 1)), dtype=bool, count=width)
        if hi - lo + 1 < SEGMENT // 8:
            k = lo // SEGMENT
            with self._lock:
                cached = self._segments.get(k) if hi // SEGMENT == k else None
            if cached is not None:
                return cached[lo - k * SEGMENT : hi - k * SEGMENT + 1].copy()
            return self._mark(lo, hi)
        parts = []
        for k in range(lo // SEGMENT, hi // SEGMENT + 1):
            seg = self._segment(k)
            a = max(lo, k * SEGMENT) - k * SEGMENT
            b = min(hi, (k + 1) * SEGMENT - 1) - k * SEGMENT
            parts.append(seg[a : b + 1])
        return np.concatenate(parts)

    def primes_in(self, lo: int, hi: int) -> np.ndarray:
        lo = max(lo, 0)
        if hi < lo:
            return np.zeros(0, dtype=np.int64)
        if hi >= 2**63:
            raise BudgetExceeded("prime range upper end", hi, 2**63 - 1)
        return np.flatnonzero(self.mask(lo, hi)).astype(np.int64) + lo

    def pi(self, x: int) -> int:
        if x < 2:
            return 0
        if x > self.limit:
            raise BudgetExceeded("pi(x) argument", x, self.limit)
        k_end = x // SEGMENT
        total = sum(self._segment_count(k) for k in range(k_end))
        seg = self._segment(k_end)
        return total + int(np.count_nonzero(seg[: x - k_end * SEGMENT + 1]))

    def pi_d(self, x: int, d: int) -> int:
        if d < 0:
            raise SpecError(f"pi_d needs d >= 0, got {d}")
        if d == 0:
            return self.pi(x)
        if x < 2:
            return 0
        if x + d > self.limit:
            raise BudgetExceeded("pi_d(x) argument x + d", x + d, self.limit)
        total = 0
        for lo in range(0, x + 1, SEGMENT):
            hi = min(lo + SEGMENT - 1, x)
            total += int(np.count_nonzero(self.mask(lo, hi) & self.mask(lo + d, hi + d)))
        if d % 2 == 1:
            # only p = 2 can have p + d prime when d is odd
            assert total <= 1, (x, d, total)
        return total


_default = Sieve()


def default_sieve() -> Sieve:
    return _default


def is_prime(n: int) -> bool:
    n = abs(n)
    if n <= _default.limit:
        return bool(_default.mask(n, n)[0])
    return miller_rabin(n)


def primes_in(lo: int, hi: int) -> np.ndarray:
    """All primes in ``[lo, hi]`` as a sorted int64 array."""
    if lo < 0:
        raise SpecError("primes_in takes lo >= 0; use signed_primes for negative ranges")
    return _default.primes_in(lo, hi)


def pi(x: int) -> int:
    """Number of primes in ``[0, x]``."""
    return _default.pi(x)


def pi_d(x: int, d: int) -> int:
    """card{p prime, p <= x : p + d prime}; ``pi_d(x, 0) == pi(x)``."""
    return _default.pi_d(x, d)


def signed_primes(lo: int, hi: int) -> np.ndarray:
    """Sorted members of ``P = {±p}`` inside ``[lo, hi]``."""
    pos = _default.primes_in(max(lo, 2), hi) if hi >= 2 else np.zeros(0, dtype=np.int64)
    neg = -_default.primes_in(max(-hi, 2), -lo)[::-1] if lo <= -2 else np.zeros(0, dtype=np.int64)
    return np.concatenate([neg, pos])


def signed_prime_powers(lo: int, hi: int) -> np.ndarray:
    """Sorted members of ``{±p**k : p prime, k >= 1}`` inside ``[lo, hi]``."""
    r = max(abs(lo), abs(hi))
    if r < 2:
        return np.zeros(0, dtype=np.int64)
    vals = [_default.primes_in(2, r)]
    k = 2
    while 2**k <= r:
        root = _iroot(r, k)
        ps = _default.primes_in(2, root)
        vals.append(ps**k)
        k += 1
    mags = np.unique(np.concatenate(vals))
    both = np.concatenate([-mags[::-1], mags])
    return both[(both >= lo) & (both <= hi)]


def _iroot(x: int, k: int) -> int:
    r = int(round(x ** (1.0 / k)))
    while r**k > x:
        r -= 1
    while (r + 1) ** k <= x:
        r += 1
    return r


def twin_values(d: int, lo: int, hi: int) -> np.ndarray:
    """Sorted members of ``P_d = {p, p+d : p, p+d in P}`` inside ``[lo, hi]``."""
    if d < 1:
        raise SpecError(f"twin_primes needs d >= 1, got {d}")
    s = signed_primes(lo - d, hi + d)
    lower = s[np.isin(s + d, s, assume_unique=True)]
    vals = np.union1d(lower, lower + d)
    return vals[(vals >= lo) & (vals <= hi)]


def twin_set(d: int, window):
    """``P_d`` intersected with ``window`` as a PointSet."""
    from .pointsets import GeneratorSpec, generate

    return generate(GeneratorSpec("twin_primes", {"d": d}), window)


@dataclass(frozen=True)
class BrunTitchmarsh:
    m: int
    n: int
    lhs: int  # pi(m + n) - pi(m)
    rhs: int  # 2 * pi(n)
    holds: bool
    asserted: bool  # False at n = 1, where 2*pi(1) = 0 makes the inequality meaningless


def brun_titchmarsh_check(m: int, n: int) -> BrunTitchmarsh:
    if m < 1 or n < 1:
        raise SpecError(f"Brun-Titchmarsh needs positive m, n; got m={m}, n={n}")
    lhs = pi(m + n) - pi(m)
    rhs = 2 * pi(n)
    return BrunTitchmarsh(m, n, lhs, rhs, lhs <= rhs, n >= 2)


def remark_bound(n: int, m: int) -> Fraction:
    """(2*pi_|m|(n) + |m|) / pi(n): finite-n bound on |gamma_{F_n} - delta_0|({m})."""
    if n < 2:
        raise SpecError(f"remark_bound needs n >= 2, got {n}")
    m = abs(m)
    return Fraction(2 * pi_d(n, m) + m, pi(n))
