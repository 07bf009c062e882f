"""Exit criteria, one test each; tolerances and runtimes are pinned."""
from __future__ import annotations

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from countdiff import primes
from countdiff.autocorr import (
    count_shift,
    divergence_witness,
    eta_series,
    finite_autocorr,
    product_embed_autocorr,
    subset_stability_check,
    tensor_delta0,
    weighted_autocorr_at_zero,
)
from countdiff.pointsets import GeneratorSpec, from_points, generate, weighted_harmonic_comb
from countdiff.spectrum import comb_fourier, patterson_direct, patterson_fft
from countdiff.windows import builtin_family
from conftest import verdict

pytestmark = pytest.mark.acceptance

SYM = builtin_family("symmetric")


def _random_int_set(rng, max_points, span):
    k = int(rng.integers(1, max_points + 1))
    return from_points(np.unique(rng.integers(-span, span + 1, k)).tolist())


def _all_pairs(F) -> dict:
    d = np.subtract.outer(F.values, F.values).ravel()
    keys, counts = np.unique(d, return_counts=True)
    return dict(zip(keys.tolist(), counts.tolist()))


def test_c01_lag_merge_equals_all_pairs():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    bad = 0
    for _ in range(200):
        F = _random_int_set(rng, 500, 2000)
        comb = finite_autocorr(F)
        # entry(t) = mass / norm, so exact equality of both parts is exact equality of the comb
        got = dict(zip(comb.keys.tolist(), comb.mass.tolist()))
        bad += got != _all_pairs(F) or comb.norm != len(F)
    dt = time.perf_counter() - t0
    verdict(1, "oracle equivalence", bad == 0 and dt < 10, f"{bad}/200 mismatches, {dt:.2f}s (limit 10s)")


def test_c02_mass_ratio_identity():
    rng = np.random.default_rng(202)
    bad = 0
    for _ in range(100):
        F = _random_int_set(rng, 300, 5000)
        width = Fraction(int(F.values[-1] - F.values[0]) + int(rng.integers(1, 100)), int(rng.integers(1, 7)))
        dens = finite_autocorr(F, "density", width=width)
        cnt = finite_autocorr(F, "counting")
        ratio = Fraction(len(F)) / width
        bad += any(dens.entry(t) != ratio * w for t, w in cnt.items())
    verdict(2, "mass-ratio identity", bad == 0, f"{bad}/100 cases differ (exact rationals)")


def test_c03_patterson_identity():
    rng = np.random.default_rng(303)
    t0 = time.perf_counter()
    worst_comb = worst_fft = 0.0
    M = 2**14
    for _ in range(50):
        F = _random_int_set(rng, 2048, 5000)
        ys = rng.random(64)
        direct = patterson_direct(F, ys).intensity
        via_comb = comb_fourier(finite_autocorr(F), ys).intensity
        idx = rng.integers(0, M, 64)
        fft = patterson_fft(F, M).intensity[idx]
        direct_grid = patterson_direct(F, idx / M).intensity
        # relative to the peak height I(0) = card F
        worst_comb = max(worst_comb, float(np.max(np.abs(via_comb - direct))) / len(F))
        worst_fft = max(worst_fft, float(np.max(np.abs(fft - direct_grid))) / len(F))
    dt = time.perf_counter() - t0
    ok = worst_comb <= 1e-9 and worst_fft <= 1e-9 and dt < 30
    verdict(3, "Patterson identity", ok, f"comb {worst_comb:.1e}, fft {worst_fft:.1e} (limit 1e-9), {dt:.2f}s")


MATRIX = [
    "primes",
    "prime_powers",
    "twin_primes:d=2",
    "twin_primes:d=6",
    "factorials",
    "fibonacci",
    "geometric:a=2",
    "geometric:a=5/2",
    "integers",
    "arithmetic:step=7",
    "shift_union:base=factorials,k=1",
    "embed_factorial:base=integers",
    "embed_factorial:base=primes",
    "substitution_positions:system=thue_morse,letter=a",
    "substitution_positions:system=rudin_shapiro,letter=b",
    "dyadic_pathological",
]
WINDOWS = [(-10, 10), (-1000, 1000), (0, 10**5), (Fraction(-7, 3), Fraction(1, 2)), (-(10**6), 17)]


def test_c04_zero_entry_is_one():
    checked = bad = 0
    for spec in MATRIX:
        for w in WINDOWS:
            F = generate(spec, w)
            if len(F) == 0:
                continue
            checked += 1
            bad += finite_autocorr(F, t_max=0).entry(0) != 1
    verdict(4, "entry(0) = 1", bad == 0 and checked > 50, f"{bad} failures over {checked} nonempty samples")


def test_c05_primes_symmetric_bound():
    t0 = time.perf_counter()
    ns = [10**4, 10**5, 10**6]
    violations = []
    for t in [*range(-50, 0), *range(1, 51)]:
        for r in eta_series(GeneratorSpec("primes"), SYM, ns, t).rows:
            if not r.eta_count <= primes.remark_bound(r.n, t):
                violations.append((r.n, t))
    eta2 = eta_series(GeneratorSpec("primes"), SYM, [10**6], 2).rows[0].eta_count
    dt = time.perf_counter() - t0
    ok = not violations and 0.09 <= eta2 <= 0.12 and dt < 60
    verdict(5, "primes under the finite-n bound", ok,
            f"{len(violations)} violations, eta(2) at 1e6 = {float(eta2):.5f} in [0.09, 0.12], {dt:.2f}s")


def test_c06_factorial_gap_windows():
    counts = {n: len(primes.signed_primes(math.factorial(n), math.factorial(n) + n)) for n in range(3, 19)}
    worst = max(counts.values())
    verdict(6, "degenerate windows", worst <= 1, f"max card(P ∩ [n!, n!+n]) over 3..18 = {worst}")


def test_c07_sparse_sets():
    t0 = time.perf_counter()
    n = 10**12
    details, ok = [], True
    for spec in ("factorials", "fibonacci", "geometric:a=2"):
        F = generate(spec, (-n, n))
        comb = finite_autocorr(F)
        off = max((w for t, w in comb.items() if t != 0), default=Fraction(0))
        good_entries = off <= Fraction(2, len(F))
        good_card = len(F) >= 30
        ok &= good_entries and good_card
        details.append(f"{spec}: card {len(F)} (need >= 30), max off-zero {float(off):.4f} <= {2 / len(F):.4f}: {good_entries}")
    dt = time.perf_counter() - t0
    ok &= dt < 5
    verdict(7, "sparse sets", ok, "; ".join(details) + f"; {dt:.2f}s")


def test_c08_shift_union():
    t0 = time.perf_counter()
    spec = GeneratorSpec("shift_union", {"base": GeneratorSpec("factorials"), "k": 1})
    ns = [10**10, 10**11, 10**12, 10**15]
    s0 = eta_series(spec, SYM, ns, 0)
    s1 = eta_series(spec, SYM, ns, 1)
    cards = s1.column("card_Fn")
    eta1 = s1.column("eta_count")
    dt = time.perf_counter() - t0
    ok = (
        min(cards) >= 25
        and all(abs(e - Fraction(1, 2)) <= Fraction(6, 100) for e in eta1)
        and all(e == 1 for e in s0.column("eta_count"))
        and dt < 5
    )
    verdict(8, "shift union", ok, f"cards {cards}, eta(1) {[round(float(e), 4) for e in eta1]}, {dt:.2f}s")


def test_c09_factorial_embedding():
    t0 = time.perf_counter()
    spec = GeneratorSpec("embed_factorial", {"base": GeneratorSpec("integers"), "max_block": 10})
    F = generate(spec, (-10**7, 10**7))
    density = Fraction(len(F), 2 * 10**7)
    eta1 = Fraction(count_shift(F, 1), len(F))
    subs = [Fraction(count_shift(G, 1), len(G)) for G in (generate(spec, (-(10**k), 10**k)) for k in range(1, 8))]
    trending = all(b >= a for a, b in zip(subs, subs[1:]))
    dt = time.perf_counter() - t0
    ok = density <= Fraction(1, 10**4) and eta1 >= Fraction(9, 10) and trending and eta1 == Fraction(104, 112) and dt < 10
    verdict(9, "zero-density construction", ok,
            f"card {len(F)}, density {float(density):.2e}, eta(1) = {eta1} ~ {float(eta1):.4f}, "
            f"sub-window trend {[round(float(s), 4) for s in subs]}, {dt:.2f}s")


def test_c10_twin_primes():
    t0 = time.perf_counter()
    ns = [10**2, 10**3, 10**4, 10**5, 10**6]
    rows = eta_series(GeneratorSpec("twin_primes", {"d": 2}), SYM, ns, 2).rows
    floor_ok = all(r.eta_count >= Fraction(1, 2) for r in rows)
    top = rows[-1].eta_count
    dt = time.perf_counter() - t0
    ok = floor_ok and Fraction(1, 2) <= top <= Fraction(51, 100) and dt < 60
    verdict(10, "twin primes", ok,
            f"entry(2) at 1e6 = {top} ~ {float(top):.5f}, floor 1/2 at all n: {floor_ok}, {dt:.2f}s")


def test_c11_prime_powers():
    t0 = time.perf_counter()
    (row,) = subset_stability_check(GeneratorSpec("primes"), GeneratorSpec("prime_powers"), SYM, [10**6], t_max=20)
    dt = time.perf_counter() - t0
    ok = row.ratio >= 0.99 and row.sup_diff <= 0.02 and dt < 90
    verdict(11, "prime powers", ok, f"card ratio {row.ratio:.5f}, sup |diff| {row.sup_diff:.5f} at t={row.argmax_t}, {dt:.2f}s")


def test_c12_divergence_witness():
    t0 = time.perf_counter()
    rows = [r for r in divergence_witness(7) if r.m >= 3]
    dt = time.perf_counter() - t0
    ok = all(r.value >= r.bound for r in rows) and dt < 10
    verdict(12, "divergence witness", ok,
            ", ".join(f"4^{r.m}: {float(r.value):.3f} >= {r.bound}" for r in rows) + f", {dt:.2f}s")


def test_c13_tensor_embedding():
    rng = np.random.default_rng(1313)
    bad = 0
    for _ in range(20):
        F = _random_int_set(rng, 200, 1000)
        direct = product_embed_autocorr(F).entries
        bad += direct != tensor_delta0(finite_autocorr(F)).entries
    verdict(13, "tensor embedding", bad == 0, f"{bad}/20 mismatches (exact)")


def test_c14_brun_titchmarsh():
    t0 = time.perf_counter()
    rng = random.Random(1414)
    pairs = [(rng.randint(2, 10**4), rng.randint(2, 10**4)) for _ in range(10**4)]
    pairs += [(m, n) for m in range(1, 201) for n in range(2, 201)]
    fails = [(m, n) for m, n in pairs if not primes.brun_titchmarsh_check(m, n).holds]
    dt = time.perf_counter() - t0
    verdict(14, "Brun-Titchmarsh", not fails and dt < 20, f"{len(fails)} failures over {len(pairs)} pairs, {dt:.2f}s")


def test_c15_weighted_comb():
    t0 = time.perf_counter()
    w = np.array(weighted_harmonic_comb((1, 10**6)).weight_list())
    ratio = np.cumsum(w * w) / np.cumsum(w)
    tail = ratio[9:]  # N = 10 .. 10**6
    monotone = bool(np.all(np.diff(tail) < 0))
    decades = [weighted_autocorr_at_zero(weighted_harmonic_comb((1, 10**k))) for k in range(1, 7)]
    at_top = decades[-1]
    dt = time.perf_counter() - t0
    ok = monotone and at_top < 0.12 and abs(at_top - tail[-1]) < 1e-12 and dt < 5
    verdict(15, "weighted comb", ok, f"monotone {monotone}, value at 1e6 = {at_top:.6f} < 0.12, {dt:.2f}s")
