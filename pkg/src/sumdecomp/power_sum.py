"""Fixed-size sum-decomposition through the first M power sums.

A multiset ``X`` of size ``M`` is encoded as ``(p_1, ..., p_M)`` with
``p_q = sum(u**q for u in X)``, where ``u`` is the element after an affine
map of the domain.  Decoding converts power sums to elementary symmetric
polynomials (Newton's identities, in exact rational arithmetic on the float
inputs) and recovers the roots of ``prod(t - u)``.

Roots are found with simultaneous (Durand-Kerner / Weierstrass) iteration in
double precision; when the double-precision estimate is ill-conditioned the
roots are polished by the same iteration in extended precision (mpmath).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import OutOfImage, PreconditionError, RootRecoveryFailure, SizeMismatch
from .lab import ElementMap
from .multiset import UNIT, DomainInterval, LatentVector, Multiset, as_multiset

DEFAULT_ROOT_TOL = 1e-9
DEFAULT_MAX_ROOT_ITERS = 200
# roots this far outside the (internal) domain are clamped rather than rejected;
# a double root on the boundary splits by about sqrt(eps) under latent rounding
DOMAIN_SLACK = 1e-6
# conditioning limit of double-precision latents; larger sizes are accepted but unsupported
MAX_SUPPORTED_SIZE = 10

_EPS = np.finfo(float).eps
_POLISH_DPS = 40
_POLISH_TRIGGER = 1e-10

SCALINGS = ("symmetric", "unit")


def power_sums(values: Sequence[float], count: int) -> list[float]:
    """``[sum(v**q) for q in 1..count]``, each sum correctly rounded."""
    vals = [float(v) for v in values]
    out = []
    powers = list(vals)
    for _ in range(count):
        out.append(math.fsum(powers))
        powers = [a * b for a, b in zip(powers, vals)]
    return out


def power_to_elementary(p: Sequence, exact: bool = False) -> list:
    """Newton's identities: power sums ``p_1..p_M`` to ``e_1..e_M``.

    Uses ``k e_k = sum_{i=1..k} (-1)**(i-1) e_{k-i} p_i`` with ``e_0 = 1``.
    With ``exact=True`` the float inputs are taken as exact rationals and the
    result is a list of :class:`~fractions.Fraction`.
    """
    if exact:
        ps = [Fraction(x) for x in p]
        one = Fraction(1)
    else:
        ps = [float(x) for x in p]
        if not all(math.isfinite(x) for x in ps):
            raise PreconditionError("power sums must be finite")
        one = 1.0
    e = [one]
    for k in range(1, len(ps) + 1):
        acc = 0 * one
        for i in range(1, k + 1):
            term = e[k - i] * ps[i - 1]
            acc = acc + term if i % 2 == 1 else acc - term
        e.append(acc / k)
    return e[1:]


def elementary_from_roots(roots: Sequence[float]) -> list[float]:
    """Expand ``prod(t - r)`` and return ``e_1..e_M`` (signs removed)."""
    coeffs = np.poly(np.asarray(roots, dtype=float)) if len(roots) else np.array([1.0])
    return [float(c) * (-1) ** k for k, c in enumerate(coeffs)][1:]


def _monic_coefficients(e: Sequence) -> list[Fraction]:
    # t^M - e1 t^(M-1) + e2 t^(M-2) - ...
    return [Fraction(1)] + [Fraction(ek) * (-1) ** k for k, ek in enumerate(e, start=1)]


def durand_kerner(coeffs: Sequence[float], max_iters: int = DEFAULT_MAX_ROOT_ITERS) -> np.ndarray:
    """Roots of a monic polynomial (highest degree first) by Weierstrass iteration.

    Starting points lie on a circle of radius ``1 + max|c_k|``, which encloses
    every root.  Iteration stops once each residual is at the rounding-noise
    level of the polynomial evaluation.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    deg = len(c) - 1
    if deg < 1:
        return np.zeros(0, dtype=np.complex128)
    if deg == 1:
        return np.array([-c[1]], dtype=np.complex128)
    radius = 1.0 + float(np.max(np.abs(c[1:])))
    z = radius * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))
    abs_c = np.abs(c)
    noise = 4 * deg * _EPS
    for _ in range(max_iters):
        val = np.polyval(c, z)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        denom = np.prod(diff, axis=1)
        if np.any(denom == 0):
            # coincident iterates: nudge apart and keep going
            z = z + 1e-12 * np.exp(1j * np.arange(deg))
            continue
        w = val / denom
        z = z - w
        bound = noise * np.polyval(abs_c, np.abs(z))
        if np.all(np.abs(np.polyval(c, z)) <= bound):
            break
    return z


def _conditioning(coeffs: Sequence[float], z: np.ndarray) -> float:
    """Worst first-order root error estimate from evaluation noise."""
    c = np.asarray(coeffs, dtype=np.complex128)
    deg = len(c) - 1
    dc = c[:-1] * np.arange(deg, 0, -1)
    slope = np.abs(np.polyval(dc, z))
    noise = 4 * deg * _EPS * np.polyval(np.abs(c), np.abs(z))
    with np.errstate(divide="ignore"):
        est = np.where(slope > 0, noise / slope, np.inf)
    return float(np.max(est))


def _polish(coeffs: Sequence[Fraction], z: np.ndarray, max_iters: int) -> np.ndarray:
    with mpmath.workdps(_POLISH_DPS):
        c = [mpmath.mpf(q.numerator) / q.denominator for q in coeffs]
        zs = [mpmath.mpc(complex(v)) for v in z]
        deg = len(zs)
        # far below double resolution; clustered roots converge only linearly
        stop = mpmath.mpf(10) ** -15
        for _ in range(max_iters):
            worst = mpmath.mpf(0)
            new = []
            for i in range(deg):
                den = mpmath.mpf(1)
                for j in range(deg):
                    if j != i:
                        den *= zs[i] - zs[j]
                if den == 0:
                    new.append(zs[i] + stop)
                    continue
                w = mpmath.polyval(c, zs[i]) / den
                new.append(zs[i] - w)
                worst = max(worst, abs(w))
            zs = new
            if worst <= stop:
                break
        return np.array([complex(v) for v in zs], dtype=np.complex128)


def _groups(n: int, linked: Callable[[int, int], bool]) -> list[list[int]]:
    """Connected components of ``range(n)`` under the symmetric relation ``linked``."""
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if linked(i, j):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _real_clusters(z: np.ndarray, root_tol: float) -> list[tuple[float, int]]:
    """Group root estimates that stand for one real root: ``(centre, multiplicity)``.

    A k-fold real root is moved by rounding of the latent into a ring of
    radius about ``eps**(1/k)`` that usually leaves the real axis.  Roots
    closer than ``10 root_tol`` are grouped, and so are roots within three
    times the larger of their imaginary parts, which links every member of
    such a ring.  Whether a group really is a multiple real root is decided
    afterwards by :func:`_fit_multiplicities`.
    """

    def linked(i, j):
        d = abs(z[i] - z[j])
        radius = 3.0 * max(abs(z[i].imag), abs(z[j].imag))
        return d <= 10 * root_tol or (radius > 3.0 * root_tol and d <= radius)

    out = [(float(np.mean(z[g]).real), len(g)) for g in _groups(len(z), linked)]
    for (centre, k), g in zip(out, _groups(len(z), linked)):
        if k == 1 and abs(z[g[0]].imag) > root_tol:
            raise RootRecoveryFailure(f"root with imaginary part {abs(z[g[0]].imag):.3g} > root_tol {root_tol:g}")
    return sorted(out)


def elementary_noise(p: Sequence[float]) -> list[float]:
    """First-order bound on ``|delta e_k|`` from one ulp of rounding in each ``p_q``."""
    ps = [float(x) for x in p]
    dp = [_EPS * abs(x) for x in ps]
    e = [1.0] + [abs(v) for v in power_to_elementary(ps)]
    de = [0.0]
    for k in range(1, len(ps) + 1):
        de.append(sum(de[k - i] * abs(ps[i - 1]) + e[k - i] * dp[i - 1] for i in range(1, k + 1)) / k)
    return de[1:]


def _merge_unresolved(
    clusters: list[tuple[float, int]], coeffs: Sequence[Fraction], e_noise: Sequence[float]
) -> list[tuple[float, int]]:
    """Merge neighbouring real roots that lie within their rounding uncertainty.

    A multiple root can also split along the real axis.  A k-fold root ``y``
    moves by about ``(noise(y) / prod_j |y - y_j|**k_j)**(1/k)``.  Merging is
    agglomerative: the least resolved neighbours go first and uncertainties
    are recomputed with the new multiplicities, since the first-order estimate
    overstates the uncertainty of each half of a split pair.
    """
    deg = len(coeffs) - 1
    abs_c = np.abs([float(c) for c in coeffs])
    e_noise = np.asarray(e_noise, dtype=float)
    clusters = list(clusters)
    while len(clusters) > 1:
        y = np.array([c for c, _ in clusters])
        k = np.array([m for _, m in clusters])
        powers = np.abs(y)[:, None] ** np.arange(deg - 1, -1, -1)[None, :]
        noise = 4.0 * (powers @ e_noise) + _EPS * np.polyval(abs_c, np.abs(y))
        gaps = np.abs(y[:, None] - y[None, :])
        np.fill_diagonal(gaps, 1.0)
        with np.errstate(divide="ignore"):
            logs = np.log(gaps) * k[None, :]
            unc = np.exp((np.log(noise) - logs.sum(axis=1)) / k)
        ratio = np.diff(y) / (unc[1:] + unc[:-1])
        i = int(np.argmin(ratio))
        if not ratio[i] <= 1.0:
            break
        (a, ka), (b, kb) = clusters[i], clusters[i + 1]
        clusters[i : i + 2] = [((ka * a + kb * b) / (ka + kb), ka + kb)]
    return clusters


def _power_sums_of(coeffs: Sequence[Fraction]) -> list[float]:
    """Power sums of the roots of a monic polynomial (inverse Newton identities, exact)."""
    deg = len(coeffs) - 1
    e = [Fraction(1)] + [(-1) ** k * c for k, c in enumerate(coeffs)][1:]
    p: list[Fraction] = []
    for k in range(1, deg + 1):
        acc = (-1) ** (k - 1) * k * e[k]
        for i in range(1, k):
            acc += (-1) ** (k - 1 + i) * e[k - i] * p[i - 1]
        p.append(acc)
    return [float(v) for v in p]


def _fit_multiplicities(clusters: list[tuple[float, int]], p: Sequence[float], max_iters: int = 30):
    """Gauss-Newton for distinct values ``y_j`` with ``sum_j k_j y_j**q = p_q``.

    Returns the fitted values and the scaled power-sum residual.
    """
    y = np.array([c for c, _ in clusters])
    k = np.array([m for _, m in clusters], dtype=float)
    p = np.asarray(p, dtype=float)
    q = np.arange(1, len(p) + 1)[:, None]
    scale = 1.0 + np.abs(p)

    def residual(v):
        return ((k[None, :] * v[None, :] ** q).sum(axis=1) - p) / scale

    for _ in range(max_iters):
        jac = k[None, :] * q * y[None, :] ** (q - 1) / scale[:, None]
        step = np.linalg.lstsq(jac, -residual(y), rcond=None)[0]
        y = y + step
        if np.max(np.abs(step)) <= 4 * _EPS * (1.0 + np.max(np.abs(y))):
            break
    return y, float(np.max(np.abs(residual(y))))


def _residual(coeffs: Sequence[Fraction], x: float) -> float:
    with mpmath.workdps(_POLISH_DPS):
        c = [mpmath.mpf(q.numerator) / q.denominator for q in coeffs]
        return float(abs(mpmath.polyval(c, mpmath.mpf(x))))


def find_real_roots(
    e: Sequence,
    root_tol: float = DEFAULT_ROOT_TOL,
    max_root_iters: int = DEFAULT_MAX_ROOT_ITERS,
    e_noise: Sequence[float] | None = None,
    merge_unresolved: bool = False,
) -> list[float]:
    """Real roots, with multiplicity, of ``t^M - e_1 t^(M-1) + ... + (-1)^M e_M``.

    Clusters of non-real estimates around a multiple real root are always
    collapsed.  With ``merge_unresolved``, real roots closer than the
    uncertainty implied by ``e_noise`` (see :func:`elementary_noise`, a
    pessimistic bound) are merged as well.  Multiple roots are refined
    jointly and checked against the coefficients.
    """
    if root_tol <= 0 or max_root_iters < 1:
        raise PreconditionError("need root_tol > 0 and max_root_iters >= 1")
    coeffs = _monic_coefficients(e)
    deg = len(coeffs) - 1
    if deg == 0:
        return []
    fcoeffs = [float(q) for q in coeffs]
    z = durand_kerner(fcoeffs, max_root_iters)
    if _conditioning(fcoeffs, z) > _POLISH_TRIGGER or np.max(np.abs(z.imag)) > root_tol:
        z = _polish(coeffs, z, max_root_iters)
    clusters = _real_clusters(z, root_tol)
    if e_noise is None:
        e_noise = [deg * _EPS * abs(float(ek)) for ek in e]
    candidates = [clusters]
    if merge_unresolved:
        candidates.insert(0, _merge_unresolved(clusters, coeffs, e_noise))
    if all(m == 1 for _, m in candidates[0]):
        roots = sorted(c for c, _ in candidates[0])
    else:
        p = _power_sums_of(coeffs)
        best = None
        for cand in candidates:
            y, res = _fit_multiplicities(cand, p)
            if res <= root_tol:
                best = [float(v) for v, (_, m) in zip(y, cand) for _ in range(m)]
                break
        if best is None:
            raise RootRecoveryFailure(
                f"roots are not real: no real multiset reproduces the power sums (residual {res:.3g})"
            )
        roots = sorted(best)
    for r in roots:
        res = _residual(coeffs, r)
        if not res <= root_tol:
            raise RootRecoveryFailure(f"residual {res:.3g} at root {r!r} exceeds root_tol {root_tol:g}")
    return roots


def _clamp(roots: Sequence[float], domain: DomainInterval, tol: float) -> list[float]:
    out = []
    for r in roots:
        if domain.lo - tol <= r < domain.lo:
            r = domain.lo
        elif domain.hi < r <= domain.hi + tol:
            r = domain.hi
        out.append(r)
    return out


def roots_from_elementary(
    e: Sequence,
    domain: DomainInterval = UNIT,
    root_tol: float = DEFAULT_ROOT_TOL,
    max_root_iters: int = DEFAULT_MAX_ROOT_ITERS,
    e_noise: Sequence[float] | None = None,
) -> Multiset:
    """Multiset of roots of the monic polynomial with elementary symmetric values ``e``.

    Roots within ``max(root_tol, DOMAIN_SLACK * width)`` outside ``domain``
    are clamped onto its boundary; roots further outside are returned as they
    are (callers validate).
    """
    slack = max(root_tol, DOMAIN_SLACK * domain.width)
    roots = find_real_roots(e, root_tol, max_root_iters)
    if not all(domain.contains(r, slack) for r in roots):
        # a multiple root on the boundary can split along the real axis; retry merged
        try:
            merged = find_real_roots(e, root_tol, max_root_iters, e_noise, merge_unresolved=True)
        except RootRecoveryFailure:
            merged = roots
        if all(domain.contains(r, slack) for r in merged):
            roots = merged
    return Multiset(_clamp(roots, domain, slack), domain)


def roots_from_power_sums(
    p: Sequence[float],
    domain: DomainInterval = UNIT,
    root_tol: float = DEFAULT_ROOT_TOL,
    max_root_iters: int = DEFAULT_MAX_ROOT_ITERS,
) -> Multiset:
    e = power_to_elementary(p, exact=True)
    return roots_from_elementary(e, domain, root_tol, max_root_iters, elementary_noise(p))


@dataclass(frozen=True)
class PowerSumCodec:
    """Encode size-``set_size`` multisets as their first ``set_size`` power sums.

    ``scaling`` picks the affine map applied before taking powers:
    ``"symmetric"`` sends the domain onto ``[-1, 1]`` (default; far better
    conditioned), ``"unit"`` sends it onto ``[0, 1]``.
    """

    set_size: int
    domain: DomainInterval = UNIT
    root_tol: float = DEFAULT_ROOT_TOL
    max_root_iters: int = DEFAULT_MAX_ROOT_ITERS
    scaling: str = "symmetric"

    def __post_init__(self):
        if self.set_size < 1:
            raise PreconditionError("set_size must be >= 1")
        if not self.root_tol > 0:
            raise PreconditionError("root_tol must be > 0")
        if self.max_root_iters < 1:
            raise PreconditionError("max_root_iters must be >= 1")
        if self.scaling not in SCALINGS:
            raise PreconditionError(f"scaling must be one of {SCALINGS}")

    @property
    def latent_dim(self) -> int:
        return self.set_size

    @property
    def internal_domain(self) -> DomainInterval:
        return DomainInterval(-1.0, 1.0) if self.scaling == "symmetric" else UNIT

    def to_internal(self, x: float) -> float:
        lo, hi = self.domain.lo, self.domain.hi
        if self.scaling == "symmetric":
            return (2.0 * x - lo - hi) / (hi - lo)
        return (x - lo) / (hi - lo)

    def from_internal(self, u: float) -> float:
        lo, hi = self.domain.lo, self.domain.hi
        if self.scaling == "symmetric":
            return ((hi - lo) * u + lo + hi) / 2.0
        return lo + (hi - lo) * u

    def phi(self, x: float) -> np.ndarray:
        """Per-element map ``x -> (u, u**2, ..., u**M)``."""
        u = self.to_internal(x)
        return np.array(power_sums([u], self.set_size))

    def element_map(self) -> ElementMap:
        return ElementMap(self.set_size, self.phi, batch_eval=self._phi_batch)

    def _phi_batch(self, xs: np.ndarray) -> np.ndarray:
        u = np.array([self.to_internal(x) for x in np.asarray(xs, dtype=float)])
        return u[:, None] ** np.arange(1, self.set_size + 1)[None, :]

    def encode(self, X) -> LatentVector:
        X = as_multiset(X, self.domain)
        if len(X) != self.set_size:
            raise SizeMismatch(f"expected a multiset of size {self.set_size}, got {len(X)}")
        return LatentVector(tuple(power_sums([self.to_internal(x) for x in X], self.set_size)))

    def decode_internal(self, z: Sequence[float]) -> list[float]:
        roots = roots_from_power_sums(list(z), self.internal_domain, self.root_tol, self.max_root_iters)
        return list(roots)

    def decode(self, z) -> Multiset:
        vals = list(z.values if isinstance(z, LatentVector) else z)
        if len(vals) != self.set_size:
            raise SizeMismatch(f"expected a latent of dimension {self.set_size}, got {len(vals)}")
        if not all(math.isfinite(v) for v in vals):
            raise OutOfImage("latent vector has non-finite entries")
        inner = self.internal_domain
        out = []
        for u in self.decode_internal(vals):
            if not inner.contains(u, max(self.root_tol, DOMAIN_SLACK * inner.width)):
                raise OutOfImage(f"recovered element {self.from_internal(u)!r} lies outside the domain")
            x = min(max(self.from_internal(u), self.domain.lo), self.domain.hi)
            out.append(x)
        return Multiset(out, self.domain)

    def build_rho(self, f: Callable[[Multiset], float]) -> Callable[[LatentVector], float]:
        """``rho = f o decode`` so that ``rho(encode(X)) == f(X)``."""

        def rho(z):
            return f(self.decode(z))

        return rho


def encode(codec: PowerSumCodec, X) -> LatentVector:
    return codec.encode(X)


def decode(codec: PowerSumCodec, z) -> Multiset:
    return codec.decode(z)


def build_rho(codec: PowerSumCodec, f):
    return codec.build_rho(f)
