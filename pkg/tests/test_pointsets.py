from __future__ import annotations

import io
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from countdiff.errors import BudgetExceeded, SpecError
from countdiff.pointsets import (
    GeneratorSpec,
    dyadic_pathological,
    embed_factorial,
    from_points,
    generate,
    read_csv,
    substitution_positions,
    to_csv,
    weighted_harmonic_comb,
)
from countdiff.windows import Interval
from conftest import trial_is_prime

SIMPLE = [
    "primes",
    "primes:signed=false",
    "prime_powers",
    "twin_primes:d=2",
    "factorials",
    "fibonacci",
    "geometric:a=3",
    "integers",
    "arithmetic:step=3,offset=1",
    "shift_union:base=factorials,k=1",
    "embed_factorial:base=integers",
    "substitution_positions:system=thue_morse,letter=a",
    "substitution_positions:system=rudin_shapiro,letter=b",
]


def test_generate_examples():
    assert generate("primes", (-10, 10)).points() == [-7, -5, -3, -2, 2, 3, 5, 7]
    assert generate("factorials", (0, 30)).points() == [1, 2, 6, 24]
    assert generate("fibonacci", (0, 30)).points() == [1, 2, 3, 5, 8, 13, 21]
    assert generate("geometric:a=2", (0, 30)).points() == [2, 4, 8, 16]
    assert generate("primes:signed=false", (-10, 10)).points() == [2, 3, 5, 7]
    for spec in SIMPLE:
        assert generate(spec, (Fraction(1, 10), Fraction(2, 10))).card == 0


def test_generate_errors():
    with pytest.raises(SpecError):
        generate("nope", (0, 1))
    with pytest.raises(SpecError):
        generate("geometric:a=1", (0, 10))
    with pytest.raises(SpecError):
        generate("shift_union:base=factorials,k=0", (0, 10))
    with pytest.raises(SpecError):
        generate("twin_primes:d=0", (0, 10))
    with pytest.raises(BudgetExceeded) as exc:
        generate("integers", (0, 10**8))
    assert "50000000" in str(exc.value)
    with pytest.raises(BudgetExceeded):
        generate("integers", (0, 100), budget=50)


def test_real_geometric():
    ps = generate("geometric:a=3/2", (0, 4))
    assert ps.mode == "real"
    assert ps.points() == [1.5, 2.25, 3.375]


def test_integer_mode_is_exact():
    ps = generate("factorials", (0, 10**18))
    assert ps.values.dtype == np.int64
    assert ps.points()[-1] == math.factorial(19)
    assert all(isinstance(v, int) for v in ps.points())


def test_embed_factorial_examples():
    got = embed_factorial(GeneratorSpec("integers"), 4, (0, 30)).points()
    assert got == [3, 4, 5, 6, 7, 8, 9] + list(range(20, 29))
    empty = embed_factorial(lambda w: from_points([]), 6, (0, 10**4))
    assert empty.card == 0
    assert embed_factorial(GeneratorSpec("integers"), 10, (10, 19)).card == 0
    with pytest.raises(SpecError):
        embed_factorial(GeneratorSpec("integers"), 2, (0, 30))


def test_embed_factorial_block_sizes():
    ps = embed_factorial(GeneratorSpec("integers"), 10, (-10**7, 10**7))
    assert ps.card == sum(2 * n + 1 for n in range(3, 11)) == 112


def test_substitution_examples():
    assert substitution_positions("thue_morse", "a", 8).points() == [0, 3, 5, 6]
    assert substitution_positions("thue_morse", "a", 1).points() == [0]
    assert substitution_positions("rudin_shapiro", "a", 8).points() == [0, 1, 2, 4, 5, 7]
    with pytest.raises(SpecError):
        substitution_positions("fibonacci_word", "a", 8)
    with pytest.raises(SpecError):
        substitution_positions("thue_morse", "a", 0)


def _thue_morse_word(k):
    w = "a"
    while len(w) < k:
        w = "".join("ab" if c == "a" else "ba" for c in w)
    return w[:k]


def _rudin_shapiro_word(k):
    # pair substitution A->AB, B->AC, C->DB, D->DC; A,B read as +1
    w = "A"
    while len(w) < k:
        w = "".join({"A": "AB", "B": "AC", "C": "DB", "D": "DC"}[c] for c in w)
    return ["a" if c in "AB" else "b" for c in w[:k]]


def test_substitutions_match_iterated_rules():
    tm = _thue_morse_word(1024)
    assert substitution_positions("thue_morse", "b", 1024).points() == [i for i, c in enumerate(tm) if c == "b"]
    rs = _rudin_shapiro_word(1024)
    assert substitution_positions("rudin_shapiro", "a", 1024).points() == [i for i, c in enumerate(rs) if c == "a"]


def test_dyadic_examples():
    assert dyadic_pathological(1, (0, 4)).points() == [Fraction(7, 2), Fraction(15, 4)]
    assert dyadic_pathological(5, (0, 1)).card == 0
    for m in range(1, 9):
        block = dyadic_pathological(m, (4**m - 1, 4**m))
        assert block.card == 2**m
    with pytest.raises(SpecError):
        dyadic_pathological(0, (0, 4))


def test_harmonic_comb():
    ps = weighted_harmonic_comb((1, 4))
    assert ps.points() == [1, 2, 3, 4]
    assert ps.weight_list() == [1.0, 0.5, 1 / 3, 0.25]
    assert weighted_harmonic_comb((-5, 0)).card == 0
    total = math.fsum(weighted_harmonic_comb((1, 1000)).weight_list())
    assert total == pytest.approx(sum(Fraction(1, k) for k in range(1, 1001)), rel=1e-15)


def test_csv_formats():
    assert to_csv(generate("factorials", (0, 30))) == "x\n1\n2\n6\n24\n"
    assert to_csv(dyadic_pathological(1, (0, 4))) == "x\n3.5\n3.75\n"
    assert to_csv(weighted_harmonic_comb((1, 2))) == "x,w\n1,1\n2,0.5\n"
    assert to_csv(generate("primes", (24, 28))) == "x\n"
    ps = dyadic_pathological(4, (-300, 300))
    back = read_csv(io.StringIO(to_csv(ps)))
    assert back.same_points(ps)


def test_spec_parse_round_trip():
    s = GeneratorSpec.parse("embed_factorial:base=substitution_positions,base.system=thue_morse,max_block=6")
    assert s.params["base"] == GeneratorSpec("substitution_positions", {"system": "thue_morse"})
    assert GeneratorSpec.parse(str(s)) == s


def test_two_sided_thue_morse_reflection():
    ps = generate("substitution_positions:system=thue_morse,letter=a", (-64, 63))
    pts = set(ps.points())
    assert all((x in pts) == (-x - 1 in pts) for x in range(-64, 64))


windows = st.tuples(st.integers(-3000, 3000), st.integers(0, 3000)).map(lambda t: (t[0], t[0] + t[1]))


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SIMPLE), windows, windows)
def test_idempotent_windowing(spec, w1, w2):
    W1, W2 = Interval(*w1), Interval(*w2)
    inner = W1.intersect(W2)
    restricted = generate(spec, W1).restrict(W2)
    if inner is None:
        assert restricted.card == 0
    else:
        assert restricted.same_points(generate(spec, inner))


@settings(max_examples=30, deadline=None)
@given(windows)
def test_idempotent_windowing_dyadic(w):
    W = Interval(Fraction(w[0], 7), Fraction(w[0], 7) + Fraction(w[1] - w[0], 3))
    big = dyadic_pathological(None, (-5000, 5000))
    assert big.restrict(W).same_points(dyadic_pathological(None, W))


@settings(max_examples=40, deadline=None)
@given(windows)
def test_signed_primes_symmetry(w):
    W = Interval(*w)
    a = generate("primes", W)
    b = generate("primes", W.reflect())
    assert sorted(-x for x in a.points()) == b.points()
    assert all(trial_is_prime(x) for x in a.points())


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SIMPLE), windows)
def test_points_inside_window_and_increasing(spec, w):
    ps = generate(spec, w)
    pts = ps.points()
    assert all(w[0] <= x <= w[1] for x in pts)
    assert all(a < b for a, b in zip(pts, pts[1:]))
    assert ps.points() == generate(spec, w).points()


@pytest.mark.parametrize("spec", ["factorials", "fibonacci", "geometric:a=2", "geometric:a=5/2"])
def test_sparse_gaps_grow(spec):
    pts = generate(spec, (0, 10**12)).points()
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    assert all(g2 >= g1 for g1, g2 in zip(gaps, gaps[1:]))
    assert gaps[-1] > 10**10
