"""A function that is continuous at every rational point but jumps on a dense set.

``psi_tilde`` starts from the identity on ``(0, 1]`` and, at level ``i``,
reflects every dyadic interval of length ``2**-i`` whose binary digit
``b_i`` is 1 about its midpoint, alternating the sign with the running count
of one-digits.  The limit jumps exactly at the dyadic rationals.  Rescaling
by an irrational ``A`` (``ln 4``) moves all jumps to irrational points, so
``psi(x) = psi_tilde(x / A)`` is continuous at every rational in ``[0, A]``.

Binary digits use the non-terminating expansion for dyadic rationals, which
matches the half-open intervals ``(k 2**-n, (k+1) 2**-n]``.  Digit and
midpoint computations scale by powers of two only, so they are exact on
floating-point inputs.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DomainViolation, PreconditionError

LN4 = math.log(4.0)
# float digits beyond this level are below double resolution
MAX_FLOAT_LEVEL = 52


@dataclass(frozen=True)
class PsiConfig:
    scale_A: float = LN4
    truncation_n: int = 40
    probe_radii: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)

    def __post_init__(self):
        if not self.scale_A > 0:
            raise PreconditionError("scale_A must be positive")
        if self.truncation_n < 1:
            raise PreconditionError("truncation_n must be >= 1")
        if any(r <= 0 for r in self.probe_radii):
            raise PreconditionError("probe radii must be positive")


def _check_unit(x: float) -> None:
    if not 0 < x <= 1:
        raise DomainViolation(f"{x!r} not in (0, 1]")


def interval_index(x: float, n: int) -> int:
    """The ``k`` with ``k 2**-n < x <= (k+1) 2**-n``."""
    _check_unit(x)
    num, den = Fraction(x).as_integer_ratio()
    # ceil(x 2**n) - 1 in exact integer arithmetic
    return -((-num * 2**n) // den) - 1


def binary_digit(x: float, n: int) -> int:
    """n-th binary digit of ``x`` (non-terminating expansion for dyadics)."""
    if n < 1:
        raise PreconditionError("digit position starts at 1")
    return interval_index(x, n) & 1


def midpoint(x: float, n: int) -> float:
    """Midpoint of the level-``n`` half-open dyadic interval holding ``x``."""
    k = interval_index(x, n)
    return math.ldexp(2 * k + 1, -(n + 1))


def psi_tilde_exact(x: float, n: int) -> Fraction:
    """Exact n-term partial sum for a float ``x`` in ``(0, 1]``."""
    _check_unit(x)
    if n < 0:
        raise PreconditionError("n must be >= 0")
    fx = Fraction(x)
    total = fx
    ones = 0
    for i in range(1, n + 1):
        k = interval_index(x, i)
        if k & 1:
            ones += 1
            a = Fraction(2 * k + 1, 2 ** (i + 1))
            term = 2 * (fx - a)
            total += -term if ones & 1 else term
    return total


def psi_tilde(x: float, n: int) -> float:
    """``x + sum_{i<=n} (-1)**c_i * b_i * 2 (x - a_i)``, rounded once to float."""
    return float(psi_tilde_exact(x, n))


def psi_tilde_array(t, n: int) -> np.ndarray:
    """Vectorised partial sum for ``t`` in ``(0, 1]``; levels above 52 are dropped.

    ``t * 2**i`` and ``ceil`` are exact in floating point, so the digits and
    midpoints agree with :func:`psi_tilde`; only the accumulation rounds.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(t > 1):
        raise DomainViolation("psi_tilde_array expects values in (0, 1]")
    levels = min(n, MAX_FLOAT_LEVEL)
    total = t.copy()
    ones = np.zeros(t.shape, dtype=np.int64)
    for i in range(1, levels + 1):
        k = np.ceil(np.ldexp(t, i)) - 1
        b = np.fmod(k, 2) == 1
        ones += b
        a = np.ldexp(k + 0.5, -i)
        sign = np.where(ones % 2 == 1, -1.0, 1.0)
        total += np.where(b, sign * 2 * (t - a), 0.0)
    return total


def truncation_for(tol: float) -> int:
    """Smallest n with ``2**-n <= tol``."""
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    return max(1, math.ceil(math.log2(1.0 / tol)))


def psi(x: float, tol: float = 1e-12, scale_A: float = LN4) -> float:
    """``psi_tilde(x / A)`` to within ``tol``; ``psi(0) = 0``."""
    if not 0 <= x <= scale_A:
        raise DomainViolation(f"{x!r} not in [0, {scale_A}]")
    if x == 0:
        return 0.0
    t = min(x / scale_A, 1.0)
    return psi_tilde(t, truncation_for(tol))


def psi_array(xs, tol: float = 1e-12, scale_A: float = LN4) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    if np.any(xs < 0) or np.any(xs > scale_A):
        raise DomainViolation(f"values outside [0, {scale_A}]")
    out = np.zeros(xs.shape)
    pos = xs > 0
    t = np.minimum(xs[pos] / scale_A, 1.0)
    out[pos] = psi_tilde_array(t, truncation_for(tol))
    return out


def oscillation_probe(
    x0: float,
    radii: Sequence[float],
    samples_per_radius: int = 1000,
    scale_A: float = LN4,
    tol: float = 1e-12,
) -> list[tuple[float, float]]:
    """``max - min`` of psi over ``[x0 - r, x0 + r]`` for each radius."""
    out = []
    for r in radii:
        lo, hi = max(0.0, x0 - r), min(scale_A, x0 + r)
        xs = np.linspace(lo, hi, samples_per_radius)
        vals = psi_array(xs, tol, scale_A)
        out.append((float(r), float(vals.max() - vals.min())))
    return out


def jump_size(t0: Fraction, offset_level: int = 45, n: int = 60) -> float:
    """|psi_tilde(t0+) - psi_tilde(t0-)| estimated just either side of ``t0``."""
    h = Fraction(1, 2**offset_level)
    left = psi_tilde_exact(float(t0 - h), n)
    right = psi_tilde_exact(float(t0 + h), n)
    return float(abs(right - left))


def psi_table(config: PsiConfig, resolution: int, tol: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:
    if resolution < 2:
        raise PreconditionError("resolution must be >= 2")
    tol = tol if tol is not None else 2.0**-config.truncation_n
    xs = np.linspace(0.0, config.scale_A, resolution)
    return xs, psi_array(xs, tol, config.scale_A)


def emit_plot(
    config: PsiConfig,
    resolution: int,
    out,
    svg=None,
    tol: Optional[float] = None,
) -> Path:
    """Write ``x,psi`` as CSV and render the curve to SVG (``out`` with .svg suffix by default)."""
    xs, ys = psi_table(config, resolution, tol)
    out = Path(out)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "psi"])
        for x, y in zip(xs, ys):
            writer.writerow([f"{x:.12g}", f"{y:.12g}"])
    if svg is not False:
        from .plotting import plot_psi

        plot_psi(xs, ys, config.scale_A, Path(svg) if svg else out.with_suffix(".svg"))
    return out
