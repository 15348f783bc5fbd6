import csv
import math

import numpy as np
import pytest

from sumdecomp.errors import InsufficientGrid, NumericalDivergence, PreconditionError, UnknownDistribution
from sumdecomp.experiment import (
    DISTRIBUTIONS,
    SweepResult,
    SweepRow,
    TrainConfig,
    config_as_dict,
    critical_points,
    in_distribution_error,
    load_config,
    median,
    monotone_violations,
    ood_probe,
    parse_grid,
    read_sweep_csv,
    sample_task,
    smooth,
    sweep,
    train,
    write_critical_csv,
    write_sweep_csv,
)
from sumdecomp.multiset import make_rng
from sumdecomp.plotting import plot_critical_points, plot_sweep


def test_defaults():
    cfg = TrainConfig()
    assert (cfg.batches, cfg.batch_size, cfg.lr0, cfg.lr_decay_per_batch, cfg.smoothing_alpha) == (
        500,
        32,
        0.001,
        0.99,
        0.95,
    )
    assert cfg.hidden_units == 64 and cfg.distributions == DISTRIBUTIONS


def test_learning_rate_schedule():
    cfg = TrainConfig()
    assert cfg.learning_rate(0) == 0.001
    assert cfg.learning_rate(100) == 0.001 * 0.99**100
    assert cfg.learning_rate(100) == pytest.approx(3.66e-4, rel=1e-3)


def test_config_validation():
    with pytest.raises(UnknownDistribution):
        TrainConfig(distributions=("cauchy",))
    with pytest.raises(PreconditionError):
        TrainConfig(latent_dim=0)
    with pytest.raises(PreconditionError):
        TrainConfig(smoothing_alpha=1.0)


def test_median_examples():
    assert median([1, 2, 3]) == 2
    assert median([1, 2, 3, 4]) == 2.5
    assert median([4, 1, 3, 2]) == 2.5


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
def test_sample_task(dist):
    X, y = sample_task(dist, 5, 64, make_rng(7))
    assert X.shape == (64, 5) and y.shape == (64,)
    assert X.min() >= 0 and X.max() <= 1
    assert np.array_equal(y, [median(row) for row in X])
    X2, y2 = sample_task(dist, 5, 64, make_rng(7))
    assert np.array_equal(X, X2) and np.array_equal(y, y2)


def test_sample_task_errors():
    with pytest.raises(UnknownDistribution):
        sample_task("cauchy", 3, 2, make_rng(0))
    with pytest.raises(PreconditionError):
        sample_task("uniform", 0, 2, make_rng(0))


def test_smoothing_formula():
    raw = [1.0, 0.5, 0.25, 2.0]
    s = smooth(raw, 0.95)
    assert s[0] == 1.0
    for t in range(1, len(raw)):
        assert s[t] == pytest.approx(0.05 * raw[t] + 0.95 * s[t - 1], rel=1e-15)


def test_train_trace_and_determinism():
    cfg = TrainConfig(set_size=3, latent_dim=2, hidden_units=8, batches=40, seed=11)
    a, b = train(cfg), train(cfg)
    assert np.array_equal(a.raw_rmse, b.raw_rmse)
    assert np.array_equal(a.smoothed_rmse, smooth(a.raw_rmse, 0.95))
    assert a.final == a.smoothed_rmse[-1] and len(a.raw_rmse) == 40
    assert not np.array_equal(a.raw_rmse, train(TrainConfig(**{**config_as_dict(cfg), "seed": 12})).raw_rmse)


def test_constant_zero_targets_are_learned():
    res = train(TrainConfig(seed=0), targets=lambda X: np.zeros(len(X)))
    assert res.final < 0.01


def test_divergence_is_reported():
    with pytest.raises(NumericalDivergence):
        train(TrainConfig(batches=3), targets=lambda X: np.full(len(X), np.inf))


def test_sweep_bookkeeping():
    base = TrainConfig(hidden_units=4, batches=5)
    res = sweep([(4, n) for n in range(1, 9)], 3, base, workers=1)
    assert len(res.rows) == 24 and not res.failures
    cells = res.cells()
    assert len(cells) == 8 and all(m == 4 for m, _ in cells)
    assert all(r.rmse_final >= 0 for r in res.rows)
    # repeats share seeds across cells
    assert {r.seed for r in res.rows} == {0, 1, 2}


def test_sweep_records_failures():
    base = TrainConfig(hidden_units=4, batches=5, lr0=1e300)
    res = sweep([(2, 1)], 1, base, workers=1)
    assert res.rows == [] and len(res.failures) == 1
    assert res.failures[0][:3] == (2, 1, 0) and "batch" in res.failures[0][3]


def test_sweep_preconditions():
    with pytest.raises(PreconditionError):
        sweep([], 1)
    with pytest.raises(PreconditionError):
        sweep([(2, 2)], 0)


def test_critical_point_example():
    (cp,) = critical_points({(4, 1): 0.20, (4, 2): 0.11, (4, 3): 0.10, (4, 4): 0.10})
    assert cp.critical_latent_dim == 2
    assert cp.threshold_rmse == pytest.approx(0.11)
    assert cp.min_rmse == 0.10


def test_critical_point_constant():
    (cp,) = critical_points({(8, n): 0.3 for n in (3, 5, 9)})
    assert cp.critical_latent_dim == 3


def test_critical_point_insufficient_grid():
    with pytest.raises(InsufficientGrid):
        critical_points({(4, 1): 0.2})


def test_monotone_violations():
    cells = {(4, 1): (0.3, 0.01), (4, 2): (0.2, 0.01), (4, 3): (0.21, 0.01), (4, 4): (0.3, 0.01)}
    assert monotone_violations(cells) == [(4, 4, 0.21, 0.3)]


def test_csv_round_trip(tmp_path):
    res = SweepResult([SweepRow(4, 1, 0, 0.25), SweepRow(4, 2, 0, 1 / 3)])
    write_sweep_csv(res, tmp_path / "s.csv")
    back = read_sweep_csv(tmp_path / "s.csv")
    assert [(r.M, r.N, r.seed) for r in back.rows] == [(4, 1, 0), (4, 2, 0)]
    assert back.rows[1].rmse_final == pytest.approx(1 / 3, rel=1e-11)
    write_critical_csv(critical_points(back), tmp_path / "c.csv")
    rows = list(csv.reader((tmp_path / "c.csv").open()))
    assert rows[0] == ["M", "critical_N", "min_rmse", "threshold"] and rows[1][:2] == ["4", "1"]


def test_bad_csv_header(tmp_path):
    (tmp_path / "x.csv").write_text("a,b\n1,2\n")
    with pytest.raises(PreconditionError):
        read_sweep_csv(tmp_path / "x.csv")


def test_parse_grid():
    assert parse_grid("M=4,8;N=1..3") == [(4, 1), (4, 2), (4, 3), (8, 1), (8, 2), (8, 3)]
    for bad in ("M=4", "M=0;N=1", "M=a;N=1", "K=1;N=2"):
        with pytest.raises(PreconditionError):
            parse_grid(bad)


def test_load_config(tmp_path):
    path = tmp_path / "cfg.txt"
    path.write_text("# desk run\nbatches = 50\nlr0 = 0.002\ndistributions = uniform, gamma\n")
    cfg = load_config(path)
    assert cfg.batches == 50 and cfg.lr0 == 0.002 and cfg.distributions == ("uniform", "gamma")
    path.write_text("momentum = 0.5\n")
    with pytest.raises(PreconditionError):
        load_config(path)


def test_ood_probe():
    res = train(TrainConfig(set_size=5, latent_dim=8, seed=0))
    probes = {p.name: p for p in ood_probe(res.model, 5)}
    assert [probes[k].label for k in ("all-ones", "step", "grid")] == [1.0, 0.0, 0.6]
    assert probes["step"].abs_error > in_distribution_error(res.model, 5)
    assert probes["grid"].abs_error < probes["step"].abs_error
    assert all(math.isfinite(p.prediction) for p in probes.values())


@pytest.mark.parametrize("M", [1, 2, 4, 7])
def test_probe_labels_for_any_size(M):
    model = train(TrainConfig(set_size=M, batches=1)).model
    labels = {p.name: p.label for p in ood_probe(model, M)}
    assert labels["all-ones"] == 1.0 and labels["step"] == 0.0


def test_plots(tmp_path):
    cells = {(4, 1): (0.3, 0.02), (4, 2): (0.2, 0.01), (8, 1): (0.35, 0.02), (8, 2): (0.25, 0.02)}
    plot_sweep(cells, tmp_path / "s.svg")
    plot_critical_points(critical_points(cells), tmp_path / "c.svg")
    for name in ("s.svg", "c.svg"):
        assert "<svg" in (tmp_path / name).read_text()
