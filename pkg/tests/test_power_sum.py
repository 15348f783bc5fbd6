from fractions import Fraction
from statistics import median

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumdecomp.errors import OutOfImage, RootRecoveryFailure, SizeMismatch
from sumdecomp.lab import collision_search
from sumdecomp.multiset import UNIT, DomainInterval, Multiset, make_rng, multiset_equal, random_multiset
from sumdecomp.power_sum import (
    PowerSumCodec,
    build_rho,
    decode,
    durand_kerner,
    elementary_from_roots,
    encode,
    power_to_elementary,
    roots_from_elementary,
)

unit_floats = st.floats(0.0, 1.0, allow_nan=False)


def unit_codec(m):
    return PowerSumCodec(m, scaling="unit")


# encode


def test_encode_single():
    assert list(encode(unit_codec(1), [0.5])) == [0.5]


def test_encode_pair():
    assert list(encode(unit_codec(2), [0.25, 0.75])) == [1.0, 0.625]


def test_encode_repeated():
    assert list(encode(unit_codec(2), [0.5, 0.5])) == [1.0, 0.5]


def test_encode_symmetric_scaling():
    # 0.25 -> -0.5, 0.75 -> 0.5
    assert list(encode(PowerSumCodec(2), [0.25, 0.75])) == [0.0, 0.5]


def test_encode_size_mismatch():
    with pytest.raises(SizeMismatch):
        encode(unit_codec(2), [0.25])


# Newton identities


def test_newton_pair():
    assert power_to_elementary([1.0, 0.625]) == pytest.approx([1.0, 0.1875], abs=1e-15)


def test_newton_zero():
    assert power_to_elementary([0.0, 0.0, 0.0]) == [0.0, 0.0, 0.0]


def test_newton_double_root():
    a = 0.5
    assert power_to_elementary([2 * a, 2 * a * a]) == pytest.approx([1.0, 0.25])


def test_newton_exact_mode():
    e = power_to_elementary([Fraction(1), Fraction(5, 8)], exact=True)
    assert e == [Fraction(1), Fraction(3, 16)]


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=6))
def test_newton_matches_expansion(xs):
    # oracle: coefficients of prod(t - x) expanded exactly
    coeffs = [Fraction(1)]
    for x in xs:
        fx = Fraction(x)
        coeffs = [a - fx * b for a, b in zip(coeffs + [Fraction(0)], [Fraction(0)] + coeffs)]
    e_oracle = [(-1) ** k * c for k, c in enumerate(coeffs)][1:]
    p = [sum(Fraction(x) ** q for x in xs) for q in range(1, len(xs) + 1)]
    assert power_to_elementary(p, exact=True) == e_oracle


# roots


def test_roots_pair():
    got = roots_from_elementary([1.0, 0.1875], UNIT)
    assert multiset_equal(got, Multiset([0.25, 0.75]), 1e-12)


def test_roots_double():
    got = roots_from_elementary([1.0, 0.25], UNIT)
    assert multiset_equal(got, Multiset([0.5, 0.5]), 1e-9)


def test_roots_all_zero():
    got = roots_from_elementary([0.0] * 4, UNIT)
    assert multiset_equal(got, Multiset([0.0] * 4), 1e-9)


def test_complex_roots_rejected():
    # t^2 + 1 has no real roots
    with pytest.raises(RootRecoveryFailure):
        roots_from_elementary([0.0, 1.0], DomainInterval(-2.0, 2.0))


def test_durand_kerner_cubic():
    r = np.sort(durand_kerner([1.0, -6.0, 11.0, -6.0]).real)
    assert r == pytest.approx([1.0, 2.0, 3.0], abs=1e-12)


# decode


def test_decode_pair():
    assert multiset_equal(decode(unit_codec(2), [1.0, 0.625]), Multiset([0.25, 0.75]), 1e-12)


def test_decode_identity_in_one_dimension():
    assert decode(PowerSumCodec(1), encode(PowerSumCodec(1), [0.5])).elements == (0.5,)


def test_decode_outside_domain():
    # {1.5, 0.5} on [0, 1]
    with pytest.raises(OutOfImage):
        decode(unit_codec(2), [2.0, 2.5])


def test_decode_dimension_checked():
    with pytest.raises(SizeMismatch):
        decode(unit_codec(2), [1.0])


def test_round_trip_m6():
    codec = PowerSumCodec(6)
    rng = make_rng(6)
    worst = 0.0
    for _ in range(1000):
        X = random_multiset(rng, 6)
        Y = decode(codec, encode(codec, X))
        worst = max(worst, max(abs(a - b) for a, b in zip(X, Y)))
    assert worst < 1e-6


def test_round_trip_other_domain():
    dom = DomainInterval(-3.0, 5.0)
    codec = PowerSumCodec(4, dom)
    X = Multiset([-3.0, 0.1, 0.1, 4.9], dom)
    assert multiset_equal(codec.decode(codec.encode(X)), X, 1e-6 * dom.width)


@given(st.lists(unit_floats, min_size=1, max_size=5))
def test_round_trip_property(xs):
    codec = PowerSumCodec(len(xs))
    assert multiset_equal(codec.decode(codec.encode(xs)), Multiset(xs), 1e-6)


@given(
    st.lists(st.integers(0, 100), min_size=1, max_size=3, unique=True),
    st.lists(st.integers(1, 3), min_size=3, max_size=3),
)
def test_round_trip_with_repeats(grid, counts):
    # repeated values a grid step (0.01) apart; closer clusters are not
    # resolvable from rounded power sums
    xs = [g / 100 for g, c in zip(grid, counts) for _ in range(c)]
    codec = PowerSumCodec(len(xs))
    assert multiset_equal(codec.decode(codec.encode(xs)), Multiset(xs), 1e-6)


@given(st.lists(unit_floats, min_size=1, max_size=8), st.randoms())
def test_encode_permutation_invariant(xs, rnd):
    codec = PowerSumCodec(len(xs))
    ys = list(xs)
    rnd.shuffle(ys)
    assert codec.encode(xs) == codec.encode(ys)


def test_recovered_roots_reexpand():
    rng = make_rng(11)
    for m in range(1, 9):
        codec = PowerSumCodec(m)
        for _ in range(50):
            X = random_multiset(rng, m)
            z = codec.encode(X)
            e = power_to_elementary(list(z))
            back = elementary_from_roots([codec.to_internal(x) for x in codec.decode(z)])
            assert np.max(np.abs(np.subtract(back, e))) <= 1e-8


def test_encode_continuity_slope():
    codec = unit_codec(4)
    X = [0.1, 0.35, 0.6, 0.8]
    delta = 1e-7
    z0 = np.array(codec.encode(X))
    z1 = np.array(codec.encode([X[0], X[1] + delta, X[2], X[3]]))
    slope = (z1 - z0) / delta
    expected = np.array([q * X[1] ** (q - 1) for q in range(1, 5)])
    assert np.allclose(slope, expected, rtol=1e-4)


def test_no_collisions_for_power_maps():
    codec = PowerSumCodec(4)
    rep = collision_search(codec.element_map(), 4, 100_000, 1e-9, seed=0)
    assert not rep.found


# build_rho


def test_rho_max():
    codec = unit_codec(2)
    assert build_rho(codec, max)([1.0, 0.625]) == pytest.approx(0.75, abs=1e-12)


def test_rho_median():
    codec = PowerSumCodec(3)
    rho = build_rho(codec, median)
    assert rho(codec.encode([0.1, 0.5, 0.9])) == pytest.approx(0.5, abs=1e-9)


def test_rho_sum_equals_first_power_sum():
    codec = unit_codec(3)
    X = [0.125, 0.25, 0.5]
    z = codec.encode(X)
    assert build_rho(codec, sum)(z) == pytest.approx(z[0], abs=1e-12)
    assert z[0] == 0.875
