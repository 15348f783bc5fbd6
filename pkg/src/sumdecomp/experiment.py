"""Latent-bottleneck experiment: learn the median of a set through ``rho(sum(phi(x)))``.

Fresh batches are drawn every step (there is no train/test split); the
reported metric is the exponentially smoothed batch RMSE at the end of
training.  Sweeping the latent dimension ``N`` for several set sizes ``M``
shows the error falling with ``N`` until a critical point that grows with
``M``.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import InsufficientGrid, NumericalDivergence, PreconditionError, SumDecompError, UnknownDistribution
from .multiset import check_seed, make_rng
from .nets import AdamState, DeepSetsModel, adam_step, forward_batch, mse_and_grads

DISTRIBUTIONS = ("uniform", "gaussian", "gamma")


@dataclass(frozen=True)
class TrainConfig:
    set_size: int = 4
    latent_dim: int = 4
    hidden_units: int = 64
    batches: int = 500
    batch_size: int = 32
    lr0: float = 0.001
    lr_decay_per_batch: float = 0.99
    smoothing_alpha: float = 0.95
    distributions: tuple[str, ...] = DISTRIBUTIONS
    seed: int = 0

    def __post_init__(self):
        if self.set_size < 1 or self.latent_dim < 1 or self.hidden_units < 1:
            raise PreconditionError("set_size, latent_dim and hidden_units must be >= 1")
        if self.batches < 1 or self.batch_size < 1:
            raise PreconditionError("batches and batch_size must be >= 1")
        if not self.lr0 > 0 or not 0 < self.lr_decay_per_batch <= 1:
            raise PreconditionError("need lr0 > 0 and 0 < lr_decay_per_batch <= 1")
        if not 0 <= self.smoothing_alpha < 1:
            raise PreconditionError("smoothing_alpha must lie in [0, 1)")
        dists = tuple(self.distributions)
        if not dists:
            raise PreconditionError("need at least one distribution")
        for d in dists:
            if d not in DISTRIBUTIONS:
                raise UnknownDistribution(f"unknown distribution {d!r}; choose from {DISTRIBUTIONS}")
        object.__setattr__(self, "distributions", dists)
        check_seed(self.seed)

    def learning_rate(self, batch: int) -> float:
        return self.lr0 * self.lr_decay_per_batch**batch


def median(values) -> float:
    """Sample median; the mean of the two central values for even sizes."""
    v = np.sort(np.asarray(values, dtype=float))
    n = len(v)
    if n == 0:
        raise PreconditionError("median of an empty set")
    mid = n // 2
    return float(v[mid]) if n % 2 else float((v[mid - 1] + v[mid]) / 2)


def _draw(dist: str, shape, rng: np.random.Generator) -> np.ndarray:
    if dist == "uniform":
        return rng.uniform(0.0, 1.0, shape)
    if dist == "gaussian":
        return np.clip(rng.normal(0.5, 0.15, shape), 0.0, 1.0)
    if dist == "gamma":
        return np.clip(rng.gamma(2.0, 0.2, shape), 0.0, 1.0)
    raise UnknownDistribution(f"unknown distribution {dist!r}; choose from {DISTRIBUTIONS}")


def sample_task(dist: str, M: int, batch: int, rng: np.random.Generator):
    """``batch`` sets of ``M`` i.i.d. draws from ``dist`` and their medians.

    Returns an array of shape ``(batch, M)`` (one set per row) and the labels.
    """
    if M < 1:
        raise PreconditionError("set size must be >= 1")
    X = _draw(dist, (batch, M), rng)
    labels = np.median(X, axis=1)
    return X, labels


@dataclass
class TrainResult:
    config: TrainConfig
    raw_rmse: np.ndarray
    smoothed_rmse: np.ndarray
    model: DeepSetsModel

    @property
    def final(self) -> float:
        return float(self.smoothed_rmse[-1])


def smooth(raw: Sequence[float], alpha: float) -> np.ndarray:
    """``s_t = (1 - alpha) r_t + alpha s_{t-1}`` with ``s_0 = r_0``."""
    out = np.empty(len(raw))
    for t, r in enumerate(raw):
        out[t] = r if t == 0 else (1 - alpha) * r + alpha * out[t - 1]
    return out


def train(config: TrainConfig, targets=None) -> TrainResult:
    """Train on fresh batches; each batch's RMSE is measured before its update.

    ``targets`` optionally replaces the median with another function of a
    ``(batch, M)`` array (used by sanity checks).
    """
    rng = make_rng(config.seed)
    model = DeepSetsModel.init(config.latent_dim, config.hidden_units, rng)
    params = model.params()
    state = AdamState.zeros_like(params)
    raw = np.empty(config.batches)
    for t in range(config.batches):
        dist = config.distributions[int(rng.integers(len(config.distributions)))]
        X, y = sample_task(dist, config.set_size, config.batch_size, rng)
        if targets is not None:
            y = np.asarray(targets(X), dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            loss, grads = mse_and_grads(model, X, y)
        if not math.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads):
            raise NumericalDivergence(t)
        raw[t] = math.sqrt(loss)
        params, state = adam_step(params, grads, state, config.learning_rate(t))
        model = model.with_params(params)
    return TrainResult(config, raw, smooth(raw, config.smoothing_alpha), model)


@dataclass(frozen=True)
class SweepRow:
    M: int
    N: int
    seed: int
    rmse_final: float


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    failures: list[tuple[int, int, int, str]] = field(default_factory=list)

    def cells(self) -> dict[tuple[int, int], tuple[float, float]]:
        """``(M, N) -> (mean RMSE, standard error)`` over repeats."""
        groups: dict[tuple[int, int], list[float]] = {}
        for r in self.rows:
            groups.setdefault((r.M, r.N), []).append(r.rmse_final)
        out = {}
        for key in sorted(groups):
            v = np.array(groups[key])
            se = float(v.std(ddof=1) / math.sqrt(len(v))) if len(v) > 1 else 0.0
            out[key] = (float(v.mean()), se)
        return out

    def set_sizes(self) -> list[int]:
        return sorted({r.M for r in self.rows})


def _run_one(args):
    cfg = args
    try:
        res = train(cfg)
        return (cfg.set_size, cfg.latent_dim, cfg.seed, res.final, None)
    except SumDecompError as exc:
        return (cfg.set_size, cfg.latent_dim, cfg.seed, None, str(exc))


def sweep(
    grid: Iterable[tuple[int, int]],
    repeats: int,
    base: TrainConfig = TrainConfig(),
    workers: Optional[int] = None,
) -> SweepResult:
    """Train once per ``(M, N, repeat)``.

    Repeat ``r`` uses seed ``base.seed + r`` in every cell, so cells share
    their random streams across ``N`` and differences between cells are not
    swamped by seed noise.  Runs are independent and spread over ``workers``
    processes; failed runs are recorded, not raised.
    """
    grid = list(grid)
    if not grid:
        raise PreconditionError("empty sweep grid")
    if repeats < 1:
        raise PreconditionError("repeats must be >= 1")
    configs = [
        replace(base, set_size=M, latent_dim=N, seed=base.seed + r)
        for (M, N) in grid
        for r in range(repeats)
    ]
    if workers is None:
        workers = min(len(configs), os.cpu_count() or 1)
    if workers <= 1:
        results = [_run_one(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, configs, chunksize=max(1, len(configs) // (8 * workers))))
    out = SweepResult()
    for M, N, seed, rmse, err in sorted(results, key=lambda r: (r[0], r[1], r[2])):
        if err is None:
            out.rows.append(SweepRow(M, N, seed, rmse))
        else:
            out.failures.append((M, N, seed, err))
    return out


@dataclass(frozen=True)
class CriticalPoint:
    set_size: int
    critical_latent_dim: int
    min_rmse: float
    threshold_rmse: float


def critical_points(result, margin: float = 0.10) -> list[CriticalPoint]:
    """Smallest N whose mean RMSE is at most ``(1 + margin)`` times the per-M minimum.

    Accepts a :class:`SweepResult` or a ``{(M, N): mean}`` mapping.
    """
    if isinstance(result, SweepResult):
        means = {k: v[0] for k, v in result.cells().items()}
    else:
        means = {k: (v[0] if isinstance(v, tuple) else float(v)) for k, v in dict(result).items()}
    out = []
    for M in sorted({m for m, _ in means}):
        row = sorted((n, means[(m, n)]) for m, n in means if m == M)
        if len(row) < 2:
            raise InsufficientGrid(f"set size {M} has fewer than two latent dimensions")
        best = min(v for _, v in row)
        threshold = (1 + margin) * best
        crit = next(n for n, v in row if v <= threshold)
        out.append(CriticalPoint(M, crit, best, threshold))
    return out


def monotone_violations(cells, z: float = 1.96) -> list[tuple[int, int, float, float]]:
    """Consecutive latent dimensions where the mean RMSE rises beyond noise.

    A rise from ``N`` to the next swept ``N'`` counts when it exceeds ``z``
    standard errors of the difference of the two means.
    """
    bad = []
    for M in sorted({m for m, _ in cells}):
        ns = sorted(n for m, n in cells if m == M)
        for a, b in zip(ns[:-1], ns[1:]):
            (ma, sa), (mb, sb) = cells[(M, a)], cells[(M, b)]
            if mb > ma + z * math.hypot(sa, sb):
                bad.append((M, b, ma, mb))
    return bad


@dataclass(frozen=True)
class ProbeResult:
    name: str
    prediction: float
    label: float

    @property
    def abs_error(self) -> float:
        return abs(self.prediction - self.label)


def ood_probe(model: DeepSetsModel, M: int) -> list[ProbeResult]:
    """Out-of-distribution inputs scaled to set size ``M``.

    ``all-ones``: every element 1.0; ``step``: at most 40% ones, the rest zeros;
    ``grid``: evenly spaced ``i / M`` for ``i = 1..M``.
    """
    ones = int(0.4 * M)  # floor keeps ones a strict minority, so the median is 0
    probes = {
        "all-ones": np.ones(M),
        "step": np.concatenate([np.ones(ones), np.zeros(M - ones)]),
        "grid": np.arange(1, M + 1) / M,
    }
    out = []
    for name, x in probes.items():
        pred = float(forward_batch(model, x[None, :])[0])
        out.append(ProbeResult(name, pred, median(x)))
    return out


def in_distribution_error(model: DeepSetsModel, M: int, seed: int = 0, count: int = 1000) -> float:
    """RMSE on fresh sets drawn from the training mixture."""
    rng = make_rng(seed)
    errs = []
    for dist in DISTRIBUTIONS:
        X, y = sample_task(dist, M, count // len(DISTRIBUTIONS), rng)
        errs.append((forward_batch(model, X) - y) ** 2)
    return float(math.sqrt(np.mean(np.concatenate(errs))))


# CSV / config files

SWEEP_HEADER = ["M", "N", "seed", "rmse_final"]
CRIT_HEADER = ["M", "critical_N", "min_rmse", "threshold"]


def write_sweep_csv(result: SweepResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_HEADER)
        for r in result.rows:
            w.writerow([r.M, r.N, r.seed, f"{r.rmse_final:.12g}"])


def read_sweep_csv(path) -> SweepResult:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise PreconditionError(f"expected CSV header {','.join(SWEEP_HEADER)}")
        rows = [SweepRow(int(r["M"]), int(r["N"]), int(r["seed"]), float(r["rmse_final"])) for r in reader]
    return SweepResult(rows)


def write_critical_csv(points: Sequence[CriticalPoint], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CRIT_HEADER)
        for p in points:
            w.writerow([p.set_size, p.critical_latent_dim, f"{p.min_rmse:.12g}", f"{p.threshold_rmse:.12g}"])


def parse_grid(text: str) -> list[tuple[int, int]]:
    """``"M=4,8,16;N=1..24"`` -> the Cartesian product of both lists."""
    parts = {}
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        key, _, values = chunk.partition("=")
        key = key.strip()
        if key not in ("M", "N") or not values:
            raise PreconditionError(f"bad grid component {chunk!r}")
        parts[key] = _parse_int_list(values)
    if set(parts) != {"M", "N"}:
        raise PreconditionError("grid needs both M= and N=")
    return [(m, n) for m in parts["M"] for n in parts["N"]]


def _parse_int_list(values: str) -> list[int]:
    out = []
    try:
        for tok in values.split(","):
            tok = tok.strip()
            if ".." in tok:
                a, b = tok.split("..")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(tok))
    except ValueError as exc:
        raise PreconditionError(f"bad integer list {values!r}") from exc
    if not out or any(v < 1 for v in out):
        raise PreconditionError(f"grid values must be positive integers: {values!r}")
    return out


def load_config(path, base: TrainConfig = TrainConfig()) -> TrainConfig:
    """Read a flat ``key = value`` file whose keys are TrainConfig fields."""
    types = {f.name: f.type for f in fields(TrainConfig)}
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in types:
            raise PreconditionError(f"{path}:{lineno}: unknown or malformed setting {line!r}")
        if key == "distributions":
            values[key] = tuple(v.strip() for v in val.split(",") if v.strip())
        elif key in ("lr0", "lr_decay_per_batch", "smoothing_alpha"):
            values[key] = float(val)
        else:
            values[key] = int(val)
    return replace(base, **values)


def config_as_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
