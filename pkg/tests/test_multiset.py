import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumdecomp.errors import DomainViolation, NonFiniteElement, PreconditionError
from sumdecomp.multiset import (
    UNIT,
    DomainInterval,
    LatentVector,
    Multiset,
    canonicalize,
    format_multiset,
    format_number,
    make_rng,
    max_elementwise_error,
    multiset_equal,
    parse_multiset,
    spawn_rngs,
)

unit_floats = st.floats(0.0, 1.0, allow_nan=False)


def test_canonicalize_sorts():
    assert canonicalize([0.7, 0.2, 0.7]).elements == (0.2, 0.7, 0.7)


def test_canonicalize_empty():
    assert len(canonicalize([])) == 0


def test_canonicalize_rejects_out_of_domain():
    with pytest.raises(DomainViolation):
        canonicalize([1.5])


def test_canonicalize_rejects_nan():
    with pytest.raises(NonFiniteElement):
        canonicalize([math.nan])


def test_domain_requires_order():
    with pytest.raises(DomainViolation):
        DomainInterval(1.0, 0.0)


def test_multiset_equal_examples():
    assert multiset_equal(Multiset([0.2, 0.7]), Multiset([0.7, 0.2 + 1e-9]), 1e-6)
    assert not multiset_equal(Multiset([0.2]), Multiset([0.2, 0.2]), 1.0)
    assert not multiset_equal(Multiset([0.5, 0.5]), Multiset([0.5, 0.6]), 1e-3)


def test_multiset_equal_rejects_negative_tol():
    with pytest.raises(PreconditionError):
        multiset_equal(Multiset([0.1]), Multiset([0.1]), -1.0)


def test_max_elementwise_error_size_mismatch():
    assert max_elementwise_error(Multiset([0.1]), Multiset([])) == math.inf


@given(st.lists(unit_floats, max_size=8), st.randoms())
def test_canonicalize_permutation_invariant(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert canonicalize(xs) == canonicalize(ys)


@given(st.lists(unit_floats, max_size=6), st.lists(unit_floats, max_size=6))
def test_equal_reflexive_symmetric(xs, ys):
    a, b = Multiset(xs), Multiset(ys)
    assert multiset_equal(a, a, 0.0)
    assert multiset_equal(a, b, 0.0) == multiset_equal(b, a, 0.0)


def test_equal_seeds_equal_streams():
    a = make_rng(123).uniform(size=10_000)
    b = make_rng(123).uniform(size=10_000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(124).uniform(size=10_000))


def test_spawned_streams_differ():
    r1, r2 = spawn_rngs(5, 2)
    assert not np.array_equal(r1.uniform(size=50), r2.uniform(size=50))


def test_seed_range_checked():
    with pytest.raises(PreconditionError):
        make_rng(-1)


def test_text_round_trip():
    m = parse_multiset("{0.7, 0.2,0.7}")
    assert format_multiset(m) == "{0.2,0.7,0.7}"
    assert parse_multiset(format_multiset(m)) == m


def test_format_number():
    assert format_number(1.0) == "1.0"
    assert format_number(0.625) == "0.625"
    assert format_number(1 / 3) == "0.333333333333"


def test_latent_vector_addition():
    z = LatentVector((1.0, 2.0)) + LatentVector((0.5, 0.5))
    assert tuple(z) == (1.5, 2.5)
    with pytest.raises(PreconditionError):
        LatentVector((1.0,)) + LatentVector((1.0, 2.0))


def test_union():
    assert Multiset([0.1]).union(Multiset([0.3, 0.1])).elements == (0.1, 0.1, 0.3)
    assert UNIT.contains(1.0) and not UNIT.contains(1.0 + 1e-12)
