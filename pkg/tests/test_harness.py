import dataclasses
import math

import numpy as np
import pytest

from sharplab.config import ConfigError, ExperimentConfig, parse_config_text
from sharplab.harness import fit_order, run_validity_sweep, t_eps


# ------------------------------------------------------------------ t_eps

def test_t_eps_cubic_examples(cubic):
    # f'(0) = 1 for the cubic, so t_eps = eps^2 |ln eps|
    assert t_eps(0.05, cubic) == pytest.approx(0.0025 * math.log(20.0), rel=1e-12)
    assert t_eps(1 / math.e, cubic) == pytest.approx((1 / math.e) ** 2, rel=1e-12)


def test_t_eps_sublinear_in_eps(cubic):
    eps = np.linspace(0.01, 0.2, 40)
    vals = np.array([t_eps(e, cubic) / e for e in eps])
    assert np.all(np.diff(vals) > 0)  # t_eps/eps decreasing as eps -> 0


def test_t_eps_rejects_bad_eps(cubic):
    for bad in (0.0, 1.0, 1.5, -0.1):
        with pytest.raises(ValueError):
            t_eps(bad, cubic)


# ------------------------------------------------------------------ fits

def test_fit_order_exact_line():
    fit = fit_order([(0.1, 0.05), (0.05, 0.025), (0.025, 0.0125)])
    assert fit.order == pytest.approx(1.0, abs=1e-12)
    assert fit.constant == pytest.approx(0.5, rel=1e-12)
    assert fit.residual <= 1e-14


def test_fit_order_exact_quadratic():
    fit = fit_order([(0.1, 0.01), (0.05, 0.0025)])
    assert fit.order == pytest.approx(2.0, abs=1e-12)


def test_fit_order_perturbation_sensitivity():
    base = [(0.1, 0.05), (0.05, 0.025), (0.025, 0.0125)]
    p0 = fit_order(base).order
    for idx in range(3):
        bumped = list(base)
        e, v = bumped[idx]
        bumped[idx] = (e, v * 1.05)
        assert abs(fit_order(bumped).order - p0) <= 0.08


def test_fit_order_rejects_bad_input():
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.05)])
    with pytest.raises(ValueError):
        fit_order([(0.1, 0.0), (0.05, 0.025)])
    with pytest.raises(ValueError):
        fit_order([(-0.1, 0.05), (0.05, 0.025)])


# ------------------------------------------------------------------ config

def test_config_defaults_validate():
    ExperimentConfig().validate()


def test_config_parse_and_override():
    cfg = parse_config_text(
        """
        # radial test sweep
        eps_list = 0.1, 0.08
        mu = 1.2
        T = 0.03
        forcing = constant
        delta = 0.1
        steepness = 4
        """
    )
    assert cfg.eps_list == (0.1, 0.08)
    assert cfg.mu == 1.2
    assert cfg.forcing == "constant"
    assert cfg.steepness == 4.0


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config_text("not_a_key = 1\n")


def test_config_rejects_bad_value():
    with pytest.raises(ConfigError, match="cannot parse"):
        parse_config_text("mu = banana\n")


def test_config_rejects_inconsistent():
    with pytest.raises(ConfigError):
        parse_config_text("mu = 0.5\n")
    with pytest.raises(ConfigError):
        parse_config_text("eps_list = 0.08, 0.1\n")  # not decreasing
    with pytest.raises(ConfigError):
        parse_config_text("eps_list = 1.5, 0.1\n")


def test_config_hash_stable_and_sensitive():
    a = ExperimentConfig()
    b = ExperimentConfig()
    assert a.config_hash() == b.config_hash()
    c = dataclasses.replace(a, mu=3.0)
    assert c.config_hash() != a.config_hash()


# ------------------------------------------------------------------ sweep

# small enough to run in seconds, gentle enough that the tubes stay clear of
# the shrinking circle's center (tube factors scale with eps)
MINI = dict(
    eps_list=(0.06, 0.05),
    mu=1.2,
    T=0.02,
    R0=0.3,
    n_observers=4,
    reference_nodes=512,
)


@pytest.fixture(scope="module")
def mini_report():
    cfg = dataclasses.replace(ExperimentConfig(), **MINI)
    return run_validity_sweep(cfg)


def test_mini_sweep_records_ok(mini_report):
    assert [r.eps for r in mini_report.records] == [0.06, 0.05]
    assert all(r.ok for r in mini_report.records)
    assert all(r.graph_ok for r in mini_report.records)
    assert all(r.transversality_min > 0 for r in mini_report.records)
    assert all(r.n_components == 1 for r in mini_report.records)


def test_mini_sweep_statistics_positive(mini_report):
    for r in mini_report.records:
        assert r.hausdorff_max > 0
        assert r.layer_error_max > 0
        assert r.theta_sup > 0


def test_mini_sweep_has_fits(mini_report):
    assert "hausdorff" in mini_report.fits
    assert "layer_error" in mini_report.fits


def test_mini_sweep_deterministic_and_reproducible(mini_report):
    # same config -> byte-identical CSV; the embedded config reproduces it
    again = run_validity_sweep(mini_report.config)
    assert again.to_csv() == mini_report.to_csv()
    assert again.config_hash == mini_report.config_hash


def test_sweep_aborts_isolated():
    # the larger eps has an empty observation window; the smaller one runs
    cfg = dataclasses.replace(
        ExperimentConfig(), eps_list=(0.2, 0.1), mu=1.2, T=0.03, R0=0.3,
        n_observers=3, reference_nodes=256,
    )
    report = run_validity_sweep(cfg)
    assert not report.records[0].ok
    assert "window empty" in report.records[0].status
    assert report.records[1].ok
    assert report.any_aborted


def test_csv_shape(mini_report):
    lines = mini_report.to_csv().strip().split("\n")
    assert lines[0].startswith("eps,t_eps,status,hausdorff_max")
    assert len(lines) == 1 + len(mini_report.records)
