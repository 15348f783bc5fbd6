import math
from statistics import fmean

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumdecomp.errors import MalformedLatent, PreconditionError, RootRecoveryFailure, SizeMismatch
from sumdecomp.multiset import UNIT, DomainInterval, Multiset, make_rng, multiset_equal, random_multiset
from sumdecomp.power_sum import power_sums
from sumdecomp.varsize import VarSizeCodec, build_rho_var, decode_var, encode_var

unit_floats = st.floats(0.0, 1.0, allow_nan=False)


def codec3():
    return VarSizeCodec(3, UNIT, sentinel=-1.0)


def test_default_sentinel():
    assert VarSizeCodec(4).k == -1.0
    assert VarSizeCodec(4, DomainInterval(2.0, 5.0)).k == 1.0


def test_sentinel_inside_domain_rejected():
    with pytest.raises(PreconditionError):
        VarSizeCodec(3, UNIT, sentinel=0.5)


def test_encode_empty():
    assert list(encode_var(codec3(), [])) == [0.0, 0.0, 0.0]


def test_encode_single():
    assert list(encode_var(codec3(), [0.5])) == [1.5, -0.75, 1.125]


def test_encode_matches_padded_identity():
    # sum over the padded multiset minus M copies of the sentinel's powers
    padded = power_sums([0.5, -1.0, -1.0], 3)
    shift = [3 * (-1.0) ** q for q in range(1, 4)]
    assert list(encode_var(codec3(), [0.5])) == pytest.approx([a - b for a, b in zip(padded, shift)], abs=1e-12)


def test_encode_too_large():
    with pytest.raises(SizeMismatch):
        encode_var(codec3(), [0.1, 0.2, 0.3, 0.4])


def test_decode_empty():
    assert len(decode_var(codec3(), [0.0, 0.0, 0.0])) == 0


def test_decode_single():
    assert multiset_equal(decode_var(codec3(), [1.5, -0.75, 1.125]), Multiset([0.5]), 1e-9)


def test_decode_element_outside_domain():
    # the latent of {2.0}: (2 + 1, 4 - 1, 8 + 1)
    with pytest.raises(MalformedLatent):
        decode_var(codec3(), [3.0, 3.0, 9.0])


def test_decode_complex_roots():
    with pytest.raises(RootRecoveryFailure):
        decode_var(codec3(), [0.3, 5.0, -7.0])


def test_decode_non_finite():
    with pytest.raises(MalformedLatent):
        decode_var(codec3(), [math.nan, 0.0, 0.0])


def test_round_trip_all_sizes():
    codec = VarSizeCodec(6)
    rng = make_rng(0)
    for m in range(7):
        for _ in range(50):
            X = random_multiset(rng, m)
            Y = codec.decode(codec.encode(X))
            assert len(Y) == m
            assert multiset_equal(X, Y, 1e-6)


def test_rho_cardinality():
    codec = VarSizeCodec(5)
    assert build_rho_var(codec, len)(codec.encode([0.3, 0.4])) == 2


def test_rho_max_of_empty():
    codec = VarSizeCodec(4)
    rho = build_rho_var(codec, lambda X: max(X) if len(X) else codec.domain.lo)
    assert rho(codec.encode([])) == 0.0


def test_rho_mean():
    codec = VarSizeCodec(4)
    assert build_rho_var(codec, fmean)(codec.encode([0.2, 0.4, 0.6])) == pytest.approx(0.4, abs=1e-9)


@given(st.lists(unit_floats, max_size=5))
def test_size_recovery(xs):
    codec = VarSizeCodec(5)
    assert len(codec.decode(codec.encode(xs))) == len(xs)


@given(st.lists(unit_floats, max_size=3), st.lists(unit_floats, max_size=3))
def test_additive(xs, ys):
    codec = VarSizeCodec(6)
    joint = codec.encode(xs + ys)
    split = codec.encode(xs) + codec.encode(ys)
    assert list(joint) == pytest.approx(list(split), abs=1e-12)


@given(st.lists(unit_floats, max_size=6), st.randoms())
def test_permutation_invariant(xs, rnd):
    codec = VarSizeCodec(6)
    ys = list(xs)
    rnd.shuffle(ys)
    assert codec.encode(xs) == codec.encode(ys)


@given(st.lists(unit_floats, min_size=4, max_size=4))
def test_full_size_prefix_identity(xs):
    # a full multiset's latent is its plain power sums shifted by M k**q
    codec = VarSizeCodec(4)
    k = codec.k
    shifted = [a - 4 * k**q for q, a in enumerate(power_sums(xs, 4), start=1)]
    assert list(codec.encode(xs)) == pytest.approx(shifted, abs=1e-12)
