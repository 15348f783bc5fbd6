"""Core value types: domain intervals, canonical multisets, latent vectors, seeds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DomainViolation, NonFiniteElement, PreconditionError

SEED_MAX = 2**64 - 1


@dataclass(frozen=True)
class DomainInterval:
    """Closed interval ``[lo, hi]`` that set elements are drawn from."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainViolation(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DomainViolation(f"need lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def distance(self, x: float) -> float:
        """Distance from ``x`` to the interval (zero inside)."""
        if x < self.lo:
            return self.lo - x
        if x > self.hi:
            return x - self.hi
        return 0.0


UNIT = DomainInterval(0.0, 1.0)


class Multiset:
    """Finite multiset of reals, stored sorted ascending.

    Equality compares the sorted elements only, so two multisets built from
    different orderings of the same values are equal (and hash equal).
    """

    __slots__ = ("_elements", "_domain")

    def __init__(self, elements: Iterable[float] = (), domain: DomainInterval = UNIT):
        self._elements = tuple(sorted(float(x) for x in elements))
        self._domain = domain

    @property
    def elements(self) -> tuple[float, ...]:
        return self._elements

    @property
    def domain(self) -> DomainInterval:
        return self._domain

    def as_array(self) -> np.ndarray:
        return np.array(self._elements, dtype=float)

    def __len__(self) -> int:
        return len(self._elements)

    def __iter__(self) -> Iterator[float]:
        return iter(self._elements)

    def __getitem__(self, i):
        return self._elements[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Multiset):
            return NotImplemented
        return self._elements == other._elements

    def __hash__(self) -> int:
        return hash(self._elements)

    def __repr__(self) -> str:
        return f"Multiset({list(self._elements)!r})"

    def __str__(self) -> str:
        return format_multiset(self)

    def union(self, other: Multiset) -> Multiset:
        """Multiset sum (multiplicities add)."""
        return Multiset(self._elements + other._elements, self._domain)


@dataclass(frozen=True)
class LatentVector:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) < 1:
            raise PreconditionError("latent vector needs dimension >= 1")
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteElement(f"latent vector has non-finite entries: {vals}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __add__(self, other: LatentVector) -> LatentVector:
        if other.dim != self.dim:
            raise PreconditionError("latent dimensions differ")
        return LatentVector(tuple(a + b for a, b in zip(self.values, other.values)))


def canonicalize(elements: Iterable[float], domain: DomainInterval = UNIT) -> Multiset:
    """Validate ``elements`` against ``domain`` and return the sorted multiset.

    >>> canonicalize([0.7, 0.2, 0.7])
    Multiset([0.2, 0.7, 0.7])
    """
    vals = [float(x) for x in elements]
    for x in vals:
        if not math.isfinite(x):
            raise NonFiniteElement(f"element {x!r} is not finite")
        if not domain.contains(x):
            raise DomainViolation(f"element {x!r} outside [{domain.lo}, {domain.hi}]")
    return Multiset(vals, domain)


def multiset_equal(a: Multiset, b: Multiset, tol: float = 0.0) -> bool:
    if tol < 0:
        raise PreconditionError("tol must be non-negative")
    if len(a) != len(b):
        return False
    return all(abs(x - y) <= tol for x, y in zip(a.elements, b.elements))


def max_elementwise_error(a: Multiset, b: Multiset) -> float:
    """Largest sorted elementwise gap; ``inf`` when sizes differ."""
    if len(a) != len(b):
        return math.inf
    return max((abs(x - y) for x, y in zip(a.elements, b.elements)), default=0.0)


# text forms used on the command line

def format_number(x: float) -> str:
    """12 significant digits, always with a decimal point or exponent."""
    s = f"{x:.12g}"
    if s in ("-0",):
        s = "0"
    if not any(c in s for c in ".einn"):
        s += ".0"
    return s


def format_multiset(m: Iterable[float]) -> str:
    return "{" + ",".join(format_number(x) for x in m) + "}"


def format_vector(v: Iterable[float]) -> str:
    return ",".join(format_number(x) for x in v)


def parse_numbers(text: str) -> list[float]:
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    elif body.startswith("[") and body.endswith("]"):
        body = body[1:-1]
    body = body.strip()
    if not body:
        return []
    try:
        return [float(tok) for tok in body.split(",")]
    except ValueError as exc:
        raise PreconditionError(f"cannot parse number list {text!r}") from exc


def parse_multiset(text: str, domain: DomainInterval = UNIT) -> Multiset:
    """Parse the brace form ``{0.2,0.7,0.7}``."""
    return canonicalize(parse_numbers(text), domain)


# randomness

def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= SEED_MAX:
        raise PreconditionError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; equal seeds give identical streams."""
    return np.random.Generator(np.random.Philox(check_seed(seed)))


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """Independent child streams split from one seed."""
    children = np.random.SeedSequence(check_seed(seed)).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def random_multiset(rng: np.random.Generator, size: int, domain: DomainInterval = UNIT) -> Multiset:
    return Multiset(rng.uniform(domain.lo, domain.hi, size), domain)


def as_multiset(x, domain: DomainInterval = UNIT) -> Multiset:
    if isinstance(x, Multiset):
        return x
    return canonicalize(x, domain)


def sorted_array(values: Sequence[float]) -> np.ndarray:
    return np.sort(np.asarray(values, dtype=float))
