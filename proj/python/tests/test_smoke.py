import math

import pytest

import pdelearn as pl


def test_network_roundtrip():
    cfg = pl.NetworkConfig(1, 1, 2, 8, "tanh")
    assert cfg.param_count() == 1 * 8 + 8 + 8 * 8 + 8 + 8 + 1
    theta = pl.init_xavier(cfg, 7)
    assert len(theta) == cfg.param_count()
    y = pl.forward(cfg, theta, [0.25])
    assert len(y) == 1 and math.isfinite(y[0])
    assert pl.forward(cfg, theta, [0.25]) == y  # deterministic


def test_sobol_first_points():
    pts = pl.sobol(3, 1, skip=1)
    assert [p[0] for p in pts] == [0.5, 0.75, 0.25]


def test_metrics():
    assert pl.rel_l2([1.0, 0.0], [1.0, 0.0]) == 0.0
    assert pl.linf([1.0, 2.0], [1.0, 1.0]) == 1.0
    assert pl.mae([0.0, 2.0], [0.0, 0.0]) == 1.0
    assert pl.mse([1.0], [0.0]) == 1.0
    with pytest.raises(Exception):
        pl.rel_l2([1.0], [0.0])


def test_huber():
    assert pl.huber(0.5) == pytest.approx(0.125)
    assert pl.huber(2.0) == pytest.approx(1.5)


def test_condition_number_trend():
    kappas = [pl.condition_number(a) for a in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert kappas == sorted(kappas)
    assert kappas[0] < kappas[-1]


def test_self_consistency_gate():
    report = pl.self_consistency("composite_heat")
    assert report["max"] < 1e-9


def test_short_training_run(tmp_path):
    rec = pl.train("poisson1d", epochs=5, seed=1)
    assert not rec.failed
    assert len(rec.history) == 5
    assert rec.history[0].mu == 1.0
    assert rec.history[1].mu == 2.0
    assert rec.history[-1].loss_total < rec.history[0].loss_total

    rec.save(str(tmp_path))
    net, theta = pl.load_checkpoint(str(tmp_path / "checkpoint.json"))
    assert list(theta) == list(rec.theta)


def test_perturb():
    cfg = pl.NetworkConfig(1, 1, 1, 4, "tanh")
    theta = pl.init_xavier(cfg, 3)
    tilde = pl.perturb(theta, cfg, scale=0.05, seed=1)
    assert tilde != theta
    assert pl.perturb(theta, cfg, scale=0.05, seed=1) == tilde
