"""Finite-sample autocorrelation combs and the eta series built from them.

For a sample F the comb is ``sum_{x,y in F} w(x) w(y) delta_{x-y}`` divided by
``sum |w|`` (counting), by the window width (density), or left raw. Exact
samples (integer or dyadic) keep integer pair counts, so every entry is an
exact Fraction.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import primes as _primes
from .errors import BudgetExceeded, SpecError
from .pointsets import (
    DYADIC,
    INTEGER,
    REAL,
    GeneratorSpec,
    PointSet,
    Source,
    dyadic_pathological,
    format_dyadic,
    format_float,
    sample,
)
from .windows import Interval, WindowFamily, as_fraction

PAIR_BUDGET = 200_000_000
REAL_TOLERANCE = 1e-9

COUNTING, DENSITY, RAW = "counting", "density", "none"


@dataclass(frozen=True, eq=False)
class DiracComb:
    """Finitely supported comb ``sum mass[i] / norm * delta_{keys[i] / scale}``.

    ``mass`` holds integer pair counts for unweighted exact samples, floats
    for weighted or real samples, or Fractions for combs built by hand.
    """

    keys: np.ndarray
    mass: np.ndarray
    scale: int = 1
    norm: Optional[Union[Fraction, float]] = None
    normalization: str = RAW
    mode: str = INTEGER
    tolerance: float = 0.0

    def __len__(self) -> int:
        return int(self.keys.size)

    @property
    def exact(self) -> bool:
        return self.mode != REAL and self.mass.dtype != np.float64

    def _key(self, t):
        if self.mode == REAL:
            return float(t)
        k = as_fraction(t) * self.scale
        return int(k) if k.denominator == 1 else None

    def count(self, t):
        """Unnormalized mass at displacement t."""
        k = self._key(t)
        if k is None or not len(self):
            return 0
        if self.mode == REAL:
            i = int(np.argmin(np.abs(self.keys - k)))
            return self.mass[i].item() if abs(self.keys[i] - k) <= self.tolerance else 0
        i = int(np.searchsorted(self.keys, k))
        if i < len(self) and self.keys[i] == k:
            m = self.mass[i]
            return m.item() if hasattr(m, "item") else m
        return 0

    def _scaled(self, m):
        if self.norm is None:
            return m
        if isinstance(m, float) or isinstance(self.norm, float):
            return float(m) / float(self.norm)
        return Fraction(m) / self.norm

    def entry(self, t):
        """Weight of the point mass at t (exact Fraction for exact combs)."""
        return self._scaled(self.count(t))

    def displacements(self) -> list:
        if self.mode == INTEGER:
            return self.keys.tolist()
        if self.mode == DYADIC:
            return [Fraction(k, self.scale) for k in self.keys.tolist()]
        return self.keys.tolist()

    def weights(self) -> list:
        return [self._scaled(m) for m in self.mass.tolist()]

    def items(self) -> list:
        return list(zip(self.displacements(), self.weights()))

    def as_dict(self) -> dict:
        return dict(self.items())

    def total_mass(self):
        return sum(self.weights(), Fraction(0) if self.exact else 0.0)

    def is_symmetric(self) -> bool:
        if self.mode == REAL:
            return np.allclose(self.keys, -self.keys[::-1], atol=self.tolerance) and np.allclose(
                self.mass, self.mass[::-1]
            )
        return bool(np.array_equal(self.keys, -self.keys[::-1])) and all(
            a == b for a, b in zip(self.mass.tolist(), self.mass[::-1].tolist())
        )

    def rescaled(self, norm, normalization: str) -> "DiracComb":
        return DiracComb(self.keys, self.mass, self.scale, norm, normalization, self.mode, self.tolerance)

    def float_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Displacements and weights as float64 arrays."""
        t = self.keys.astype(np.float64) / self.scale
        w = np.array([float(x) for x in self.weights()], dtype=np.float64)
        return t, w

    @classmethod
    def from_entries(cls, entries: dict, normalization: str = RAW) -> "DiracComb":
        """Comb from a ``{displacement: weight}`` mapping of ints/dyadic Fractions/floats."""
        items = sorted((as_fraction(t) if not isinstance(t, float) else t, w) for t, w in entries.items())
        ts = [t for t, _ in items]
        ws = [w for _, w in items]
        if all(isinstance(w, (int, Fraction)) for w in ws):
            mass = np.array([Fraction(w) for w in ws], dtype=object)
        else:
            mass = np.array([float(w) for w in ws], dtype=np.float64)
        if all(isinstance(t, Fraction) for t in ts):
            scale = max([t.denominator for t in ts], default=1)
            if scale & (scale - 1):
                raise SpecError("comb displacements must be integers or dyadic rationals")
            keys = np.array([int(t * scale) for t in ts], dtype=np.int64)
            mode = INTEGER if scale == 1 else DYADIC
            return cls(keys, mass, scale, None, normalization, mode)
        keys = np.array([float(t) for t in ts], dtype=np.float64)
        return cls(keys, mass, 1, None, normalization, REAL, REAL_TOLERANCE)


def zero_comb(normalization: str = COUNTING, mode: str = INTEGER) -> DiracComb:
    dtype = np.float64 if mode == REAL else np.int64
    return DiracComb(np.zeros(0, dtype=dtype), np.zeros(0, dtype=np.int64), 1, Fraction(1), normalization, mode)


def delta0() -> DiracComb:
    return DiracComb(np.zeros(1, dtype=np.int64), np.ones(1, dtype=np.int64), 1, None, RAW, INTEGER)


def _positive_differences(values: np.ndarray, cutoff, budget: int) -> list[np.ndarray]:
    """All ``x[i+k] - x[i] > 0`` (k >= 1) that are ``<= cutoff``.

    Differences along a fixed i grow with k, so the lag loop stops once no
    pair at lag k is within the cutoff.
    """
    out = []
    used = 0
    n = values.size
    for k in range(1, n):
        d = values[k:] - values[:-k]
        if cutoff is not None:
            d = d[d <= cutoff]
            if d.size == 0:
                break
        used += d.size
        if used > budget:
            raise BudgetExceeded("pair differences", used, budget)
        out.append(d)
    return out


def _real_bins(d: np.ndarray, w: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Merge sorted displacements closer than tol; the bin key is its smallest member."""
    order = np.argsort(d, kind="stable")
    d, w = d[order], w[order]
    if d.size == 0:
        return d, w
    starts = np.concatenate([[True], np.diff(d) > tol])
    idx = np.cumsum(starts) - 1
    return d[starts], np.bincount(idx, weights=w)


def finite_autocorr(
    F: PointSet,
    normalization: str = COUNTING,
    t_max=None,
    width=None,
    budget: int = PAIR_BUDGET,
    tolerance: float = REAL_TOLERANCE,
) -> DiracComb:
    """Autocorrelation comb of a finite sample, optionally truncated to ``|t| <= t_max``.

    Density normalization divides by ``width`` or, if omitted, by the width
    of the sample's window.
    """
    if normalization not in (COUNTING, DENSITY, RAW):
        raise SpecError(f"unknown normalization {normalization!r}")
    norm = _norm(F, normalization, width)
    if len(F) == 0:
        return zero_comb(normalization, F.mode)
    cutoff = None
    if t_max is not None:
        cutoff = float(t_max) if F.mode == REAL else math.floor(as_fraction(t_max) * F.scale)
    x = F.values

    if not F.is_weighted and F.mode != REAL:
        diffs = _positive_differences(x, cutoff, budget)
        pos = np.concatenate(diffs) if diffs else np.zeros(0, dtype=np.int64)
        keys, counts = np.unique(pos, return_counts=True)
        keys = np.concatenate([-keys[::-1], [0], keys]).astype(np.int64)
        mass = np.concatenate([counts[::-1], [len(F)], counts]).astype(np.int64)
        return DiracComb(keys, mass, F.scale, norm, normalization, F.mode)

    # weighted or real samples: float masses
    wts = F.weights if F.is_weighted else np.ones(len(F))
    n = len(F)
    dparts, wparts = [], []
    used = 0
    for k in range(1, n):
        d = x[k:] - x[:-k]
        pw = wts[k:] * wts[:-k]
        if cutoff is not None:
            keep = d <= cutoff + (tolerance if F.mode == REAL else 0)
            if not keep.any():
                break
            d, pw = d[keep], pw[keep]
        used += d.size
        if used > budget:
            raise BudgetExceeded("pair differences", used, budget)
        dparts.append(d)
        wparts.append(pw)
    d = np.concatenate(dparts) if dparts else np.zeros(0, dtype=x.dtype)
    pw = np.concatenate(wparts) if wparts else np.zeros(0)
    zero_mass = float(np.sum(wts * wts))
    if F.mode == REAL:
        keys, mass = _real_bins(d, pw, tolerance)
        tol = tolerance
    else:
        keys, inv = np.unique(d, return_inverse=True)
        mass = np.bincount(inv.ravel(), weights=pw, minlength=keys.size)
        tol = 0.0
    keys = np.concatenate([-keys[::-1], np.zeros(1, dtype=keys.dtype), keys])
    mass = np.concatenate([mass[::-1], [zero_mass], mass]).astype(np.float64)
    if isinstance(norm, Fraction):
        norm = float(norm)
    return DiracComb(keys, mass, F.scale, norm, normalization, F.mode, tol)


def _norm(F: PointSet, normalization: str, width):
    if normalization == RAW:
        return None
    if normalization == COUNTING:
        if F.is_weighted:
            return float(np.sum(np.abs(F.weights))) if len(F) else Fraction(1)
        return Fraction(max(len(F), 1))
    if width is None:
        if F.window is None:
            raise SpecError("density normalization needs a window width")
        width = F.window.width
    width = as_fraction(width)
    if width <= 0:
        raise SpecError(f"density normalization needs positive width, got {width}")
    return width


def brute_force_autocorr(F: PointSet) -> dict:
    """All-pairs oracle: ``{displacement numerator: pair count}`` for unweighted exact samples."""
    counts: dict[int, int] = {}
    pts = F.values.tolist()
    for a in pts:
        for b in pts:
            counts[a - b] = counts.get(a - b, 0) + 1
    return counts


def count_shift(F: PointSet, t) -> int:
    """``card(F ∩ (-t + F))``: points x of F with x + t also in F."""
    if len(F) == 0:
        return 0
    if F.mode == REAL:
        x = F.values
        j = np.searchsorted(x, x + float(t) - REAL_TOLERANCE)
        j = np.minimum(j, x.size - 1)
        return int(np.count_nonzero(np.abs(x[j] - (x + float(t))) <= REAL_TOLERANCE))
    k = as_fraction(t) * F.scale
    if k.denominator != 1:
        return 0
    x = F.values
    shifted = x + int(k)
    j = np.searchsorted(x, shifted)
    j = np.minimum(j, x.size - 1)
    return int(np.count_nonzero(x[j] == shifted))


# -- eta series -------------------------------------------------------------

@dataclass(frozen=True)
class EtaRow:
    n: int
    card_Fn: int
    t: object
    intersection_count: int
    eta_count: Fraction
    eta_dens: Fraction
    bound: Optional[Fraction] = None


@dataclass
class EtaSeries:
    t: object
    rows: list = field(default_factory=list)

    HEADER = ("n", "card_Fn", "t", "intersection_count", "eta_count", "eta_dens", "paper_bound")

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.rows]

    def write_csv(self, stream, header: bool = True) -> None:
        write_eta_rows(self.rows, stream, header)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _fmt_num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Fraction) and v.denominator == 1:
        return str(v.numerator)
    if isinstance(v, Fraction) and v.denominator & (v.denominator - 1) == 0:
        return format_dyadic(v.numerator, v.denominator)
    return format_float(float(v))


def write_eta_rows(rows: Iterable[EtaRow], stream, header: bool = True) -> None:
    w = csv.writer(stream, lineterminator="\n")
    if header:
        w.writerow(EtaSeries.HEADER)
    for r in rows:
        w.writerow(
            [
                r.n,
                r.card_Fn,
                _fmt_num(r.t),
                r.intersection_count,
                format_float(float(r.eta_count)),
                format_float(float(r.eta_dens)),
                "" if r.bound is None else format_float(float(r.bound)),
            ]
        )


def _is_signed_primes(source) -> bool:
    return isinstance(source, GeneratorSpec) and source.name == "primes" and source.params.get("signed", True)


def prime_bound(window: Interval, t) -> Optional[Fraction]:
    """Finite-n bound on the prime eta estimate, for windows containing 0."""
    if not window.contains(0):
        return None
    t = as_fraction(t)
    if t.denominator != 1:
        return None
    b = math.floor(max(abs(window.lo), abs(window.hi)))
    if b < 2:
        return None
    return _primes.remark_bound(b, int(t))


def eta_rows_for_sample(F: PointSet, n: int, window: Interval, ts: Sequence, bound: bool) -> list[EtaRow]:
    card = len(F)
    width = window.width
    rows = []
    for t in ts:
        c = count_shift(F, t)
        eta = Fraction(c, card) if card else Fraction(0)
        dens = Fraction(card) / width * eta
        pb = prime_bound(window, t) if bound else None
        rows.append(EtaRow(n, card, t, c, eta, dens, pb))
    return rows


def _workers() -> int:
    import os

    try:
        cap = int(os.environ.get("DIFFRACT_THREADS", "0"))
    except ValueError:
        cap = 0
    return max(1, cap) if cap else 1


def eta_table(
    source: Source, family: WindowFamily, n_list: Sequence[int], ts: Sequence, workers: Optional[int] = None
) -> list[EtaSeries]:
    """One EtaSeries per displacement in ``ts``; each window is sampled once."""
    if not n_list:
        raise SpecError("n_list must be nonempty")
    if isinstance(source, str):
        source = GeneratorSpec.parse(source)
    bound = _is_signed_primes(source)

    def one(n):
        w = family(n)
        return eta_rows_for_sample(sample(source, w), n, w, ts, bound)

    workers = workers or _workers()
    if workers > 1 and len(n_list) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_n = list(pool.map(one, n_list))
    else:
        per_n = [one(n) for n in n_list]
    return [EtaSeries(t, [rows[i] for rows in per_n]) for i, t in enumerate(ts)]


def eta_series(source: Source, family: WindowFamily, n_list: Sequence[int], t) -> EtaSeries:
    """Per-n ``card(F_n ∩ (-t + F_n))`` with exact eta_count and eta_dens."""
    return eta_table(source, family, n_list, [t])[0]


# -- weighted comb ----------------------------------------------------------

def weighted_autocorr_at_zero(sample_or_weights) -> Union[Fraction, float]:
    """``sum |w|^2 / sum |w|``; exact when the weights are ints or Fractions."""
    if isinstance(sample_or_weights, PointSet):
        ws = sample_or_weights.weight_list()
    else:
        ws = list(sample_or_weights)
    if all(isinstance(w, (int, Fraction)) for w in ws):
        num = sum((Fraction(w) ** 2 for w in ws), Fraction(0))
        den = sum((abs(Fraction(w)) for w in ws), Fraction(0))
    else:
        num = math.fsum(float(w) ** 2 for w in ws)
        den = math.fsum(abs(float(w)) for w in ws)
    if den == 0:
        raise SpecError("weighted autocorrelation at 0 is undefined for all-zero weights")
    return num / den


# -- shift union and subset stability --------------------------------------

def shift_union_autocorr_check(base: Source, k: int, family: WindowFamily, n_list: Sequence[int]) -> tuple:
    """Eta series at t = 0, k, -k for ``base ∪ (k + base)``."""
    if not isinstance(k, int) or k == 0:
        raise SpecError(f"k must be a nonzero integer, got {k!r}")
    if isinstance(base, str):
        base = GeneratorSpec.parse(base)
    if isinstance(base, GeneratorSpec):
        spec = GeneratorSpec("shift_union", {"base": base, "k": k})
        return tuple(eta_table(spec, family, n_list, [0, k, -k]))

    def union(w: Interval) -> PointSet:
        a = base(w)
        b = base(Interval(w.lo - k, w.hi - k))
        vals = np.union1d(a.values, b.values + k * a.scale)
        return PointSet("shift_union", vals, a.mode, a.scale, None, w)

    return tuple(eta_table(union, family, n_list, [0, k, -k]))


@dataclass(frozen=True)
class SubsetRow:
    n: int
    card_sub: int
    card_super: int
    ratio: float
    sup_diff: float
    argmax_t: int


def subset_stability_check(
    sub: Source, sup: Source, family: WindowFamily, n_list: Sequence[int], t_max: int = 20
) -> list[SubsetRow]:
    """Cardinality ratio and ``sup_{|t| <= t_max} |eta_sup(t) - eta_sub(t)|`` per n."""
    if not n_list:
        raise SpecError("n_list must be nonempty")
    rows = []
    for n in n_list:
        w = family(n)
        A, B = sample(sub, w), sample(sup, w)
        if A.mode != B.mode or A.scale != B.scale:
            raise SpecError("subset check needs samples in the same coordinate mode")
        inside = np.isin(A.values, B.values)
        if not inside.all():
            bad = A.points()[int(np.argmin(inside))]
            raise SpecError(f"subset violation at n={n}: point {bad} is not in the superset")
        best, arg = Fraction(0), 0
        for t in range(-t_max, t_max + 1):
            ea = Fraction(count_shift(A, t), len(A)) if len(A) else Fraction(0)
            eb = Fraction(count_shift(B, t), len(B)) if len(B) else Fraction(0)
            if abs(eb - ea) > best:
                best, arg = abs(eb - ea), t
        ratio = len(A) / len(B) if len(B) else 1.0
        rows.append(SubsetRow(n, len(A), len(B), ratio, float(best), arg))
    return rows


# -- two-dimensional product embedding -------------------------------------

@dataclass
class Comb2D:
    entries: dict  # (t1, t2) -> Fraction

    def entry(self, t1, t2):
        return self.entries.get((t1, t2), 0)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t1", "t2", "weight"])
        for (t1, t2), v in sorted(self.entries.items()):
            w.writerow([_fmt_num(t1), _fmt_num(t2), format_float(float(v))])
        return buf.getvalue()


def tensor_delta0(comb: DiracComb) -> Comb2D:
    return Comb2D({(t, 0): w for t, w in comb.items() if w != 0})


PAIR_BUDGET_2D = 10**7


def product_embed_autocorr(F: PointSet, b_window=(-1, 1), normalization: str = COUNTING) -> Comb2D:
    """Comb of ``F × {0}`` in the plane, from 2D pair differences, checked against the tensor with delta_0."""
    b_lo, b_hi = as_fraction(b_window[0]), as_fraction(b_window[1])
    if not b_lo <= 0 <= b_hi:
        raise SpecError(f"the second window factor must contain 0, got [{b_lo}, {b_hi}]")
    if F.is_weighted or F.mode == REAL:
        raise SpecError("product embedding needs an unweighted exact sample")
    card = len(F)
    if card == 0:
        return Comb2D({})
    if card * card > PAIR_BUDGET_2D:
        raise BudgetExceeded("2D pair differences", card * card, PAIR_BUDGET_2D)
    pts = np.stack([F.values, np.zeros(card, dtype=np.int64)], axis=1)
    diff = (pts[:, None, :] - pts[None, :, :]).reshape(-1, 2)
    keys, counts = np.unique(diff, axis=0, return_counts=True)
    norm = Fraction(card) if normalization == COUNTING else Fraction(1)
    entries = {}
    for (k1, k2), c in zip(keys.tolist(), counts.tolist()):
        t1 = k1 if F.scale == 1 else Fraction(k1, F.scale)
        t2 = k2 if F.scale == 1 else Fraction(k2, F.scale)
        entries[(t1, t2)] = Fraction(c) / norm
    result = Comb2D(entries)
    one_d = finite_autocorr(F, COUNTING if normalization == COUNTING else RAW)
    expected = tensor_delta0(one_d)
    assert result.entries == {k: Fraction(v) for k, v in expected.entries.items()}, "tensor identity failed"
    return result


# -- tent-kernel divergence witness ----------------------------------------

MAX_WITNESS_M = 12


@dataclass(frozen=True)
class WitnessRow:
    m: int
    n: int
    card: int
    value: Fraction
    bound: Fraction  # sqrt(n) / 8 = 2**m / 8

    @property
    def holds(self) -> bool:
        return self.value >= self.bound


def tent_pairing(F: PointSet) -> Fraction:
    """``(1/card F) sum_{x,y} max(0, 1 - |x - y|)``, exactly."""
    if len(F) == 0:
        return Fraction(0)
    comb = finite_autocorr(F, RAW, t_max=1)
    total = Fraction(0)
    for t, c in comb.items():
        t = Fraction(t)
        if abs(t) < 1:
            total += c * (1 - abs(t))
    return total / len(F)


def divergence_witness(max_m: int) -> list[WitnessRow]:
    """Tent-kernel values on ``F_n = Λ ∩ [-n, n]`` for n = 4^m, m = 0..max_m."""
    if max_m < 0:
        raise SpecError(f"max_m must be >= 0, got {max_m}")
    if max_m > MAX_WITNESS_M:
        raise BudgetExceeded("divergence witness block index", max_m, MAX_WITNESS_M)
    rows = []
    for m in range(max_m + 1):
        n = 4**m
        F = dyadic_pathological(m, Interval(-n, n)) if m else PointSet("dyadic_pathological", np.zeros(0, dtype=np.int64), DYADIC, 2)
        rows.append(WitnessRow(m, n, len(F), tent_pairing(F), Fraction(2**m, 8)))
    return rows


# -- density ---------------------------------------------------------------

@dataclass(frozen=True)
class DensityRow:
    n: int
    card: int
    width: Fraction
    density: Fraction
    running_sup: Fraction
    running_inf: Fraction


def besicovitch_density(source: Source, family: WindowFamily, n_list: Sequence[int]) -> list[DensityRow]:
    """``card(F_n) / width(A_n)`` per n with running sup and inf."""
    rows = []
    hi = lo = None
    for n in n_list:
        w = family(n)
        card = len(sample(source, w))
        dens = Fraction(card) / w.width
        hi = dens if hi is None else max(hi, dens)
        lo = dens if lo is None else min(lo, dens)
        rows.append(DensityRow(n, card, w.width, dens, hi, lo))
    return rows


# -- comb CSV ----------------------------------------------------------------

def write_comb_csv(comb: DiracComb, stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["t", "weight"])
    for t, v in comb.items():
        w.writerow([_fmt_num(t) if not isinstance(t, float) else format_float(t), format_float(float(v))])


def comb_to_csv(comb: DiracComb) -> str:
    buf = io.StringIO()
    write_comb_csv(comb, buf)
    return buf.getvalue()


def read_comb_csv(stream) -> DiracComb:
    rows = list(csv.reader(stream))
    if not rows or rows[0] != ["t", "weight"]:
        raise SpecError("comb CSV needs header 't,weight'")
    entries = {}
    for t, v in rows[1:]:
        key = float(t) if any(c in t for c in "eE") else (int(t) if "." not in t else Fraction(t))
        entries[key] = float(v)
    return DiracComb.from_entries(entries)
