from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from countdiff import primes
from countdiff.errors import BudgetExceeded, SpecError
from countdiff.primes import Sieve
from conftest import trial_is_prime


def test_primes_in_small_ranges():
    assert primes.primes_in(0, 10).tolist() == [2, 3, 5, 7]
    assert primes.primes_in(90, 100).tolist() == [97]
    assert primes.primes_in(24, 28).tolist() == []
    assert primes.primes_in(10, 5).tolist() == []


def test_primes_in_rejects_negative_lo():
    with pytest.raises(SpecError):
        primes.primes_in(-5, 5)


def test_pi_values():
    assert primes.pi(0) == 0
    assert primes.pi(1) == 0
    assert primes.pi(10) == 4
    assert primes.pi(100) == 25
    assert primes.pi(200) == 46
    assert primes.pi(10**6) == 78498


def test_pi_d_values():
    assert primes.pi_d(100, 2) == 8
    assert primes.pi_d(100, 1) == 1
    assert primes.pi_d(10**6, 2) == 8169
    assert primes.pi_d(100, 0) == primes.pi(100)
    for d in range(0, 10):
        assert primes.pi_d(0, d) == 0


def test_pi_d_matches_pair_count():
    ps = set(primes.primes_in(0, 2000).tolist())
    for d in (2, 4, 6, 30):
        expected = sum(1 for p in ps if p <= 1500 and p + d in ps)
        assert primes.pi_d(1500, d) == expected


def test_odd_shift_degeneracy():
    for d in range(1, 100, 2):
        assert primes.pi_d(10**6, d) <= 1


def test_segment_boundaries_match_trial_division():
    seg = primes.SEGMENT
    for lo in (seg - 50, 2 * seg - 7, 3 * seg - 1):
        got = primes.primes_in(lo, lo + 100).tolist()
        assert got == [v for v in range(lo, lo + 101) if trial_is_prime(v)]


def test_random_values_against_trial_division():
    rng = random.Random(1)
    for _ in range(2000):
        v = rng.randrange(0, 10**9)
        assert primes.is_prime(v) == trial_is_prime(v), v


def test_miller_rabin_above_sieve_limit():
    s = Sieve(limit=10**4)
    got = s.primes_in(10**6, 10**6 + 200).tolist()
    assert got == [v for v in range(10**6, 10**6 + 201) if trial_is_prime(v)]
    assert primes.miller_rabin(2**61 - 1)
    assert not primes.miller_rabin(3215031751)  # strong pseudoprime to bases 2, 3, 5, 7


def test_wide_range_above_limit_is_budgeted():
    s = Sieve(limit=10**4)
    with pytest.raises(BudgetExceeded):
        s.primes_in(10**5, 10**6)
    with pytest.raises(BudgetExceeded):
        s.pi(10**5)


def test_signed_primes_reflect():
    assert primes.signed_primes(-10, 10).tolist() == [-7, -5, -3, -2, 2, 3, 5, 7]
    vals = primes.signed_primes(-500, 300)
    assert set((-vals).tolist()) == set(primes.signed_primes(-300, 500).tolist())


def test_signed_prime_powers():
    got = primes.signed_prime_powers(0, 30).tolist()
    assert got == [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29]
    assert primes.signed_prime_powers(-10, -1).tolist() == [-9, -8, -7, -5, -4, -3, -2]


def test_twin_values():
    assert primes.twin_values(2, 0, 20).tolist() == [3, 5, 7, 11, 13, 17, 19]
    assert primes.twin_values(2, -8, 0).tolist() == [-7, -5, -3]
    assert primes.twin_values(1, 0, 10).tolist() == [2, 3]
    assert primes.twin_set(2, (0, 20)).points() == [3, 5, 7, 11, 13, 17, 19]
    with pytest.raises(SpecError):
        primes.twin_values(0, 0, 10)


def test_brun_titchmarsh_examples():
    r = primes.brun_titchmarsh_check(100, 100)
    assert (r.lhs, r.rhs, r.holds, r.asserted) == (21, 50, True, True)
    edge = primes.brun_titchmarsh_check(1, 1)
    assert (edge.lhs, edge.rhs, edge.asserted) == (1, 0, False)
    big = primes.brun_titchmarsh_check(10**6, 10**3)
    assert big.rhs == 336 and big.holds
    with pytest.raises(SpecError):
        primes.brun_titchmarsh_check(0, 5)


def test_remark_bound_examples():
    assert primes.remark_bound(100, 2) == Fraction(18, 25)
    assert primes.remark_bound(100, 0) == 2
    assert primes.remark_bound(100, -2) == Fraction(18, 25)
    assert primes.remark_bound(10**6, 2) == Fraction(2 * 8169 + 2, 78498)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 5000), st.integers(0, 5000))
def test_pi_monotone(a, b):
    lo, hi = sorted((a, b))
    assert primes.pi(lo) <= primes.pi(hi)
    assert primes.pi_d(lo, 2) <= primes.pi_d(hi, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**7), st.integers(0, 300))
def test_primes_in_matches_trial_division(lo, width):
    got = primes.primes_in(lo, lo + width).tolist()
    assert got == [v for v in range(lo, lo + width + 1) if trial_is_prime(v)]


def test_concurrent_queries_agree():
    from concurrent.futures import ThreadPoolExecutor

    s = Sieve(cache_segments=2)
    xs = [10**5 * k for k in range(1, 21)]
    with ThreadPoolExecutor(4) as pool:
        got = list(pool.map(s.pi, xs))
    assert got == [primes.pi(x) for x in xs]
