"""Variable-size sum-decomposition with a sentinel value.

Sets smaller than ``M`` are thought of as padded with a constant ``k`` that
lies outside the domain.  Shifting the per-element map by ``phi(k)`` turns
the padded power sums back into a genuine per-element sum::

    z_q = sum(u**q - kappa**q for u in X) = P_q(padded X) - M * kappa**q

where ``u`` and ``kappa`` are the element and sentinel after the affine map
of the inner codec.  The empty set encodes to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MalformedLatent, PreconditionError, SizeMismatch
from .lab import ElementMap
from .multiset import DomainInterval, LatentVector, Multiset, UNIT, as_multiset
from .power_sum import (
    DEFAULT_MAX_ROOT_ITERS,
    DEFAULT_ROOT_TOL,
    DOMAIN_SLACK,
    PowerSumCodec,
    durand_kerner,
    power_sums,
    power_to_elementary,
    roots_from_power_sums,
)


@dataclass(frozen=True)
class VarSizeCodec:
    """Encode multisets of size ``0..max_size`` in ``R^max_size``.

    The inner fixed-size codec works over the smallest interval holding both
    the domain and the sentinel, so for the default sentinel ``lo - 1`` on
    ``[0, 1]`` the affine map is the identity.
    """

    max_size: int
    domain: DomainInterval = UNIT
    sentinel: Optional[float] = None
    root_tol: float = DEFAULT_ROOT_TOL
    max_root_iters: int = DEFAULT_MAX_ROOT_ITERS

    def __post_init__(self):
        if self.max_size < 1:
            raise PreconditionError("max_size must be >= 1")
        k = self.domain.lo - 1.0 if self.sentinel is None else float(self.sentinel)
        if not math.isfinite(k) or self.domain.contains(k):
            raise PreconditionError(f"sentinel {k} must be finite and outside [{self.domain.lo}, {self.domain.hi}]")
        object.__setattr__(self, "sentinel", k)

    @property
    def k(self) -> float:
        return self.sentinel

    @property
    def extended_domain(self) -> DomainInterval:
        return DomainInterval(min(self.k, self.domain.lo), max(self.k, self.domain.hi))

    @property
    def inner(self) -> PowerSumCodec:
        return PowerSumCodec(
            self.max_size, self.extended_domain, self.root_tol, self.max_root_iters, scaling="symmetric"
        )

    @property
    def kappa(self) -> float:
        return self.inner.to_internal(self.k)

    def _sentinel_powers(self) -> list[float]:
        return power_sums([self.kappa], self.max_size)

    def phi(self, x: float) -> np.ndarray:
        """Shifted per-element map ``u**q - kappa**q``."""
        inner = self.inner
        u = inner.to_internal(x)
        return np.array([a - b for a, b in zip(power_sums([u], self.max_size), self._sentinel_powers())])

    def element_map(self) -> ElementMap:
        return ElementMap(self.max_size, self.phi)

    def encode(self, X) -> LatentVector:
        X = as_multiset(X, self.domain)
        if len(X) > self.max_size:
            raise SizeMismatch(f"multiset of size {len(X)} exceeds max_size {self.max_size}")
        inner = self.inner
        us = [inner.to_internal(x) for x in X]
        kq = self._sentinel_powers()
        z = []
        for q in range(1, self.max_size + 1):
            z.append(math.fsum(u**q - kq[q - 1] for u in us))
        return LatentVector(tuple(z))

    def padded_power_sums(self, z) -> list[float]:
        """Power sums of the multiset padded with sentinels up to ``max_size``."""
        M = self.max_size
        return [zq + M * kq for zq, kq in zip(z, self._sentinel_powers())]

    def count_sentinels(self, z) -> int:
        """Number of padding slots, read off the roots of the padded polynomial.

        Roots are assigned to the sentinel when they are closer to it than to
        the domain; this is robust to the spread of a multiple root at the
        sentinel, which rounding makes much wider than ``root_tol``.
        """
        from fractions import Fraction

        e = power_to_elementary(self.padded_power_sums(z), exact=True)
        coeffs = [1.0] + [float(Fraction(ek) * (-1) ** k) for k, ek in enumerate(e, start=1)]
        roots = durand_kerner(coeffs, self.max_root_iters)
        inner = self.inner
        lo, hi = inner.to_internal(self.domain.lo), inner.to_internal(self.domain.hi)
        band = min(abs(self.kappa - lo), abs(self.kappa - hi)) / 2.0
        return int(np.sum(np.abs(roots - self.kappa) < band))

    def decode(self, z) -> Multiset:
        vals = list(z.values if isinstance(z, LatentVector) else z)
        M = self.max_size
        if len(vals) != M:
            raise SizeMismatch(f"expected a latent of dimension {M}, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise MalformedLatent("latent vector has non-finite entries")
        inner = self.inner
        size = M - self.count_sentinels(vals)
        if size == 0:
            elements = []
        else:
            # power sums of the actual elements only: z_q + size * kappa**q
            kq = self._sentinel_powers()
            s = [vals[q] + size * kq[q] for q in range(size)]
            lo, hi = inner.to_internal(self.domain.lo), inner.to_internal(self.domain.hi)
            roots = roots_from_power_sums(s, DomainInterval(lo, hi), self.root_tol, self.max_root_iters)
            elements = []
            for u in roots:
                x = inner.from_internal(u)
                if not self.domain.contains(x, max(self.root_tol, DOMAIN_SLACK) * self.domain.width):
                    raise MalformedLatent(f"recovered element {x!r} is neither in the domain nor the sentinel")
                elements.append(min(max(x, self.domain.lo), self.domain.hi))
        out = Multiset(elements, self.domain)
        # the latent must be reproduced in every coordinate, not only the first `size`
        again = self.encode(out).values
        scale = 1.0 + max(abs(v) for v in vals)
        mismatch = max(abs(a - b) for a, b in zip(again, vals))
        if mismatch > 1e-6 * scale:
            raise MalformedLatent(f"latent is not the image of any multiset (mismatch {mismatch:.3g})")
        return out

    def build_rho(self, f: Callable[[Multiset], float]) -> Callable[[LatentVector], float]:
        """``rho = f o decode``; sentinel slots never reach ``f``."""

        def rho(z):
            return f(self.decode(z))

        return rho


def encode_var(codec: VarSizeCodec, X) -> LatentVector:
    return codec.encode(X)


def decode_var(codec: VarSizeCodec, z) -> Multiset:
    return codec.decode(z)


def build_rho_var(codec: VarSizeCodec, f):
    return codec.build_rho(f)
