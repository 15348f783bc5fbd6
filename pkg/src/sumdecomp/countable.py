"""Exact encodings of subsets and multisets of a countable universe.

Elements are identified by their index ``0..U-1``.  Subsets map to
``sum(4**-i)`` (a base-4 numeral with digits 0/1); multisets map to the
product of the corresponding primes, whose negative logarithm is the
additive latent value.  Both are kept exact (Fraction / int) because the
base-4 construction collapses in floating point beyond a few dozen indices.
"""

from __future__ import annotations

import math
import operator
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from .errors import DuplicateIndex, IndexOutOfUniverse, NotInImage, PreconditionError, ZeroInput

ExactRational = Fraction


def first_primes(count: int) -> tuple[int, ...]:
    """The first ``count`` primes, by a sieve grown until it holds enough."""
    if count <= 0:
        return ()
    # p_n < n (ln n + ln ln n) for n >= 6
    limit = 15 if count < 6 else int(count * (math.log(count) + math.log(math.log(count)))) + 1
    while True:
        sieve = bytearray([1]) * (limit + 1)
        sieve[0:2] = b"\x00\x00"
        for i in range(2, math.isqrt(limit) + 1):
            if sieve[i]:
                sieve[i * i :: i] = bytearray(len(range(i * i, limit + 1, i)))
        primes = [i for i, flag in enumerate(sieve) if flag]
        if len(primes) >= count:
            return tuple(primes[:count])
        limit *= 2


@dataclass(frozen=True)
class CountableUniverse:
    max_index: int
    primes: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.max_index < 1:
            raise PreconditionError("universe needs max_index >= 1")
        object.__setattr__(self, "primes", first_primes(self.max_index))

    def check(self, i: int) -> int:
        try:
            idx = operator.index(i)
        except TypeError:
            idx = -1
        if not 0 <= idx < self.max_index:
            raise IndexOutOfUniverse(f"index {i!r} not in 0..{self.max_index - 1}")
        return idx

    def prime(self, i: int) -> int:
        return self.primes[self.check(i)]


def base4_encode(u: CountableUniverse, indices: Iterable[int]) -> Fraction:
    """``sum(4**-i for i in indices)`` for a set of indices (no repeats)."""
    idx = [u.check(i) for i in indices]
    dup = [i for i, n in Counter(idx).items() if n > 1]
    if dup:
        raise DuplicateIndex(f"repeated indices {sorted(dup)}; base-4 encoding takes sets only")
    return sum((Fraction(1, 4**i) for i in idx), Fraction(0))


def base4_sum(u: CountableUniverse, indices: Iterable[int]) -> Fraction:
    """The same sum with repeats allowed -- no longer injective."""
    return sum((Fraction(1, 4 ** u.check(i)) for i in indices), Fraction(0))


def base4_decode(u: CountableUniverse, v) -> frozenset[int]:
    """Read the set back from its base-4 digits; every digit must be 0 or 1."""
    v = Fraction(v)
    if v < 0:
        raise NotInImage(f"{v} is negative")
    scaled = v * 4 ** (u.max_index - 1)
    if scaled.denominator != 1:
        raise NotInImage(f"{v} has base-4 digits beyond position {u.max_index - 1}")
    n = scaled.numerator
    out = set()
    for pos in range(u.max_index - 1, -1, -1):
        n, digit = divmod(n, 4)
        if digit == 1:
            out.add(pos)
        elif digit != 0:
            raise NotInImage(f"{v} has base-4 digit {digit} at position {pos}")
    if n:
        raise NotInImage(f"{v} is too large to encode a subset")
    return frozenset(out)


def prime_encode(u: CountableUniverse, indices: Iterable[int]) -> int:
    """Product of ``p(i)`` over the multiset; the latent value is ``-log`` of it."""
    out = 1
    for i in indices:
        out *= u.prime(i)
    return out


def prime_latent(u: CountableUniverse, indices: Iterable[int]) -> float:
    """The additive form ``sum(-log p(i))`` (floating point, for illustration)."""
    return -math.fsum(math.log(u.prime(i)) for i in indices)


def prime_decode(u: CountableUniverse, n: int) -> tuple[int, ...]:
    """Factor ``n`` over the universe's primes; returns sorted indices with repeats."""
    n = int(n)
    if n < 1:
        raise NotInImage(f"{n} is not a positive integer")
    out = []
    for i, p in enumerate(u.primes):
        if n == 1:
            break
        while n % p == 0:
            n //= p
            out.append(i)
    if n != 1:
        raise NotInImage(f"factor {n} is not a product of the first {u.max_index} primes")
    return tuple(out)


@dataclass(frozen=True)
class DivergenceWitness:
    """Partial sums ``n * a`` of an infinite multiset repeating one element."""

    a: float
    partial_sums: tuple[float, ...]
    unbounded: bool
    statement: str

    def first_exceeding(self, bound: float) -> int:
        """Smallest ``n`` with ``|n a| > bound``."""
        return math.floor(abs(bound) / abs(self.a)) + 1


def divergence_witness(a: float, terms: int = 100) -> DivergenceWitness:
    if a == 0:
        raise ZeroInput("the witness needs phi(x) = a != 0")
    sums = tuple(n * a for n in range(1, terms + 1))
    statement = (
        f"repeating an element with phi(x) = {a:g} gives partial sums n*{a:g}, "
        "which exceed any bound, so no injective multiset encoding converges on infinite multisets"
    )
    return DivergenceWitness(float(a), sums, True, statement)


def format_rational(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PreconditionError(f"cannot parse rational {text!r}") from exc


def parse_indices(text: str) -> list[int]:
    body = text.strip().strip("{}[]").strip()
    if not body:
        return []
    try:
        return [int(tok) for tok in body.split(",")]
    except ValueError as exc:
        raise PreconditionError(f"cannot parse index list {text!r}") from exc
