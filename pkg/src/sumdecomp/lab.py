"""Checks around ``f(X) = rho(sum(phi(x) for x in X))``.

Tools for verifying candidate sum-decompositions, searching for latent
collisions, evaluating max-decompositions, and building the adversarial
input that shows summation is not max-decomposable through fewer latent
dimensions than set elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EmptySet, PreconditionError
from .multiset import UNIT, DomainInterval, Multiset, make_rng, multiset_equal


@dataclass(frozen=True)
class ElementMap:
    """Per-element map ``phi: R -> R^dim_out``.

    ``batch_eval``, when given, maps a 1-D array of elements to an
    ``(n, dim_out)`` array and is used by the searches for speed.
    """

    dim_out: int
    eval: Callable[[float], Sequence[float]]
    batch_eval: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.dim_out < 1:
            raise PreconditionError("dim_out must be >= 1")

    def __call__(self, x: float) -> np.ndarray:
        out = np.asarray(self.eval(float(x)), dtype=float).reshape(-1)
        if out.shape != (self.dim_out,):
            raise PreconditionError(f"phi returned shape {out.shape}, expected ({self.dim_out},)")
        return out

    def many(self, xs) -> np.ndarray:
        xs = np.asarray(xs, dtype=float).reshape(-1)
        if self.batch_eval is not None:
            return np.asarray(self.batch_eval(xs), dtype=float).reshape(len(xs), self.dim_out)
        if len(xs) == 0:
            return np.zeros((0, self.dim_out))
        return np.stack([self(x) for x in xs])

    def latent(self, X) -> np.ndarray:
        """``sum(phi(x))`` over the sorted elements, each coordinate via fsum."""
        vals = sorted(float(x) for x in X)
        rows = self.many(vals)
        return np.array([math.fsum(rows[:, j]) for j in range(self.dim_out)])


def identity_map() -> ElementMap:
    return ElementMap(1, lambda x: [x], batch_eval=lambda xs: xs[:, None])


@dataclass
class DecompositionReport:
    passed: bool
    worst_residual: float
    worst_sample: Optional[Multiset]
    residuals: list[float] = field(default_factory=list)
    failures: list[int] = field(default_factory=list)


def check_sum_decomposition(phi: ElementMap, rho, f, samples, tol: float) -> DecompositionReport:
    """Compare ``rho(sum phi(x))`` against ``f(X)`` on every sample."""
    residuals = []
    failures = []
    worst, worst_sample = -1.0, None
    for i, X in enumerate(samples):
        X = X if isinstance(X, Multiset) else Multiset(X)
        try:
            got = float(rho(phi.latent(X)))
            r = abs(got - float(f(X)))
        except ArithmeticError:
            r = math.inf
        if not math.isfinite(r):
            r = math.inf
        residuals.append(r)
        if r > tol:
            failures.append(i)
        if r > worst:
            worst, worst_sample = r, X
    return DecompositionReport(not failures, max(worst, 0.0), worst_sample, residuals, failures)


@dataclass
class CollisionReport:
    found: bool
    x: Optional[Multiset] = None
    y: Optional[Multiset] = None
    latent_distance: float = math.inf
    trials: int = 0


def check_pair(phi: ElementMap, x, y, latent_eps: float) -> CollisionReport:
    """Report a collision if distinct ``x`` and ``y`` have latents within ``latent_eps``."""
    x = x if isinstance(x, Multiset) else Multiset(x)
    y = y if isinstance(y, Multiset) else Multiset(y)
    if multiset_equal(x, y, 1e-9):
        return CollisionReport(False, trials=1)
    d = float(np.max(np.abs(phi.latent(x) - phi.latent(y))))
    if d <= latent_eps:
        return CollisionReport(True, x, y, d, 1)
    return CollisionReport(False, latent_distance=d, trials=1)


def collision_search(
    phi: ElementMap,
    M: int,
    trials: int,
    latent_eps: float,
    seed: int,
    domain: DomainInterval = UNIT,
) -> CollisionReport:
    """Sample random pairs of size-``M`` multisets and look for equal latents.

    Returns the first colliding pair, or ``found=False`` with the smallest
    latent distance seen.  Deterministic for a given ``seed``.
    """
    if trials < 1:
        raise PreconditionError("trials must be >= 1")
    rng = make_rng(seed)
    closest = math.inf
    chunk = 4096
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        xs = np.sort(rng.uniform(domain.lo, domain.hi, (n, M)), axis=1)
        ys = np.sort(rng.uniform(domain.lo, domain.hi, (n, M)), axis=1)
        lx = phi.many(xs.reshape(-1)).reshape(n, M, phi.dim_out).sum(axis=1)
        ly = phi.many(ys.reshape(-1)).reshape(n, M, phi.dim_out).sum(axis=1)
        dist = np.max(np.abs(lx - ly), axis=1)
        distinct = np.max(np.abs(xs - ys), axis=1) > 1e-9
        for i in np.flatnonzero(distinct):
            if dist[i] <= latent_eps:
                # confirm with the exact (fsum) latent before reporting
                rep = check_pair(phi, xs[i], ys[i], latent_eps)
                if rep.found:
                    rep.trials = done + i + 1
                    return rep
            closest = min(closest, float(dist[i]))
        done += n
    return CollisionReport(False, latent_distance=closest, trials=trials)


def coordinate_max(phi: ElementMap, X) -> np.ndarray:
    vals = sorted(float(x) for x in X)
    if not vals:
        raise EmptySet("max-decomposition needs a non-empty set")
    return np.max(phi.many(vals), axis=0)


def max_decompose_eval(phi: ElementMap, rho, X) -> float:
    """``rho`` applied to the coordinate-wise maximum of ``phi`` over ``X``."""
    return float(rho(coordinate_max(phi, X)))


@dataclass
class AdversaryReport:
    x: tuple[float, ...]
    x_tilde: tuple[float, ...]
    mu: tuple[int, ...]
    replaced_index: int
    max_x: np.ndarray
    max_x_tilde: np.ndarray
    sum_x: Fraction
    sum_x_tilde: Fraction

    @property
    def maxima_equal(self) -> bool:
        return bool(np.array_equal(self.max_x, self.max_x_tilde))

    @property
    def sums_differ(self) -> bool:
        return self.sum_x != self.sum_x_tilde

    @property
    def certified(self) -> bool:
        return self.maxima_equal and self.sums_differ

    def rows(self) -> list[tuple[str, str, str]]:
        from .multiset import format_number, format_vector

        return [
            ("elements", format_vector(self.x), format_vector(self.x_tilde)),
            ("coordinate max of phi", format_vector(self.max_x), format_vector(self.max_x_tilde)),
            ("sum", format_number(float(self.sum_x)), format_number(float(self.sum_x_tilde))),
        ]


def max_collision_adversary(phi: ElementMap, x, M: Optional[int] = None) -> tuple[Multiset, AdversaryReport]:
    """Build ``x_tilde`` with the same coordinate-wise phi-maxima but a different sum.

    For each latent coordinate ``n`` pick ``mu[n]``, the (lowest) index of an
    element attaining the maximum.  Since there are fewer coordinates than
    elements, some index ``m`` is never picked; overwriting ``x[m]`` with
    ``x[mu[0]]`` leaves every maximum unchanged but changes the sum.
    """
    vals = sorted(float(v) for v in (x.elements if isinstance(x, Multiset) else x))
    if M is None:
        M = len(vals)
    if len(vals) != M:
        raise PreconditionError(f"expected {M} elements, got {len(vals)}")
    N = phi.dim_out
    if N >= M:
        raise PreconditionError(f"need latent dimension N < set size M, got N={N}, M={M}")
    if len(set(vals)) != len(vals):
        raise PreconditionError("elements must be pairwise distinct")
    # per-element evaluation: batched BLAS rounding can depend on the batch,
    # and bit-equal maxima need phi(x) to be a function of x alone
    rows = np.stack([phi(v) for v in vals])
    # np.argmax returns the first (lowest index) maximiser
    mu = tuple(int(np.argmax(rows[:, n])) for n in range(N))
    m = min(i for i in range(M) if i not in mu)
    tilde = list(vals)
    tilde[m] = vals[mu[0]]
    rows_tilde = np.stack([phi(v) for v in tilde])
    report = AdversaryReport(
        x=tuple(vals),
        x_tilde=tuple(sorted(tilde)),
        mu=mu,
        replaced_index=m,
        max_x=np.max(rows, axis=0),
        max_x_tilde=np.max(rows_tilde, axis=0),
        sum_x=sum((Fraction(v) for v in vals), Fraction(0)),
        sum_x_tilde=sum((Fraction(v) for v in tilde), Fraction(0)),
    )
    domain = x.domain if isinstance(x, Multiset) else None
    xt = Multiset(tilde, domain) if domain is not None else Multiset(tilde)
    return xt, report


def random_mlp_map(dim_out: int, seed: int, hidden: int = 8, depth: int = 2) -> ElementMap:
    """A random continuous ``phi: R -> R^dim_out`` (small tanh MLP)."""
    rng = make_rng(seed)
    sizes = [1] + [hidden] * depth + [dim_out]
    layers = [
        (rng.normal(0, 1.0 / math.sqrt(a), (a, b)), rng.normal(0, 0.5, b))
        for a, b in zip(sizes[:-1], sizes[1:])
    ]

    def batch(xs):
        h = np.asarray(xs, dtype=float).reshape(-1, 1)
        for i, (W, b) in enumerate(layers):
            h = h @ W + b
            if i < len(layers) - 1:
                h = np.tanh(h)
        return h

    return ElementMap(dim_out, lambda v: batch([v])[0], batch_eval=batch)
