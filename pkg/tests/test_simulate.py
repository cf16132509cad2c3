import json
from dataclasses import replace
from importlib import resources

import numpy as np
import pytest

from twostep.errors import SpecMismatchError
from twostep.simulate import (
    BetaSpec,
    CovarianceSpec,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    gen_beta,
    rpe,
    run_prediction_experiment,
    run_selection_experiment,
    sample_design,
    sample_wishart,
    scale_config,
    tp_fp,
)
from twostep.selectors import parse_method

BUNDLED = [
    "figure1.json",
    "table1_p16.json",
    "table1_p64.json",
    "example1.json",
    "example2.json",
    "example3.json",
]


def assert_same_records(a, b):
    # Dataclass equality is useless here: NaN fields compare unequal once
    # records round-trip through worker-process pickling.
    assert len(a) == len(b)
    for r, s in zip(a, b):
        assert (r.design, r.method, r.failures) == (s.design, s.method, s.failures)
        for field in ("eta_inf", "success_rate", "rpe", "tp", "fp"):
            x, y = getattr(r, field), getattr(s, field)
            assert x == y or (np.isnan(x) and np.isnan(y)), (r.method, field)


def _tiny_selection_config(**overrides):
    base = dict(
        name="tiny",
        mode="selection",
        n=40,
        p=6,
        s=2,
        covariance=CovarianceSpec("ar", rho=0.3),
        beta=BetaSpec("fixed", values=(2.0, -1.5)),
        sigma2=0.25,
        outer=3,
        inner=4,
        methods=(
            parse_method("lasso"),
            parse_method("alasso-ols"),
            parse_method("ht-ols"),
        ),
        lambda_rule="oracle",
        seed=42,
        grid_size=25,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_sample_wishart_moments(rng):
    p, df = 3, 10
    draws = np.stack([sample_wishart(p, df, rng) for _ in range(600)])
    assert np.allclose(draws, np.swapaxes(draws, 1, 2)), "symmetric"
    for w in draws[:25]:
        assert np.min(np.linalg.eigvalsh(w)) > -1e-10
    assert np.allclose(draws.mean(axis=0), df * np.eye(p), atol=0.8)
    with pytest.raises(ValueError):
        sample_wishart(5, 4, rng)


def test_sample_design_covariance(rng):
    sigma = CovarianceSpec("ar", rho=0.6).fixed_matrix(4)
    x = sample_design(20000, sigma, rng)
    assert np.allclose(x.T @ x / 20000, sigma, atol=0.05)


def test_sample_design_singular_covariance(rng):
    v = np.array([1.0, 2.0, -1.0])
    sigma = np.outer(v, v)
    x = sample_design(50, sigma, rng)
    # Rank-1 covariance: every row is a multiple of v.
    assert np.linalg.matrix_rank(x, tol=1e-8) == 1


def test_covariance_fixed_matrices():
    ar = CovarianceSpec("ar", rho=0.5).fixed_matrix(3)
    assert np.allclose(ar, [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
    const = CovarianceSpec("constant", r=0.6).fixed_matrix(3)
    assert np.allclose(const, 0.6 + 0.4 * np.eye(3))
    blk = CovarianceSpec("block_orthogonal", a=2, off_corr=0.6).fixed_matrix(4)
    assert np.all(blk[:2, 2:] == 0.0) and np.all(blk[2:, :2] == 0.0)
    assert blk[0, 1] == 0.6 and blk[2, 3] == 0.6 and np.all(np.diag(blk) == 1.0)
    with pytest.raises(SpecMismatchError):
        CovarianceSpec("wishart", df=8).fixed_matrix(4)


def test_covariance_validation():
    assert CovarianceSpec("wishart", df=4).validate(6) == [
        "covariance.df (need df >= p)"
    ]
    assert CovarianceSpec("ar", rho=1.0).validate(3)
    assert CovarianceSpec("constant", r=-0.9).validate(3), "below -1/(p-1)"
    assert not CovarianceSpec("constant", r=-0.4).validate(3)
    assert CovarianceSpec("block_orthogonal", a=0).validate(3)
    assert CovarianceSpec("block_orthogonal", a=2, off_corr=1.0).validate(3)
    assert CovarianceSpec("toeplitz").validate(3) == ["covariance.kind"]
    assert CovarianceSpec("wishart").is_random
    assert not CovarianceSpec("ar", rho=0.1).is_random


def test_beta_spec_validation():
    assert BetaSpec("fixed", values=(1.0,)).validate(2)
    assert BetaSpec("uniform", low=0.0).validate(2)
    assert BetaSpec("uniform", low=2.0, high=1.0).validate(2)
    assert BetaSpec("tiered", values=(1.0, 2.0), counts=(1,)).validate(2)
    assert BetaSpec("tiered", values=(1.0,), counts=(3,)).validate(2)
    assert BetaSpec("fixed", values=(1.0,), placement="middle").validate(1)
    assert BetaSpec("spike").validate(1)
    assert not BetaSpec("tiered", values=(1.0, 2.0), counts=(2, 1)).validate(3)


def test_gen_beta_fixed_and_tiered():
    rng = np.random.default_rng(0)
    truth = gen_beta(BetaSpec("fixed", values=(3.0, -1.0)), 5, 2, rng, 1.0)
    assert truth.beta_star.tolist() == [3.0, -1.0, 0.0, 0.0, 0.0]
    assert truth.support.tolist() == [0, 1]
    assert truth.rho_n == 1.0

    truth = gen_beta(
        BetaSpec("tiered", values=(2.5, 0.5), counts=(2, 1)), 6, 3, rng, 1.0
    )
    assert truth.beta_star[:3].tolist() == [2.5, 2.5, 0.5]


def test_gen_beta_uniform_random_placement():
    spec = BetaSpec("uniform", low=0.5, high=2.0, placement="random")
    a = gen_beta(spec, 20, 6, np.random.default_rng(7), 1.0)
    b = gen_beta(spec, 20, 6, np.random.default_rng(7), 1.0)
    assert np.array_equal(a.beta_star, b.beta_star), "seeded draw order is fixed"
    mags = np.abs(a.beta_star[a.support])
    assert a.support.size == 6
    assert np.all((0.5 <= mags) & (mags <= 2.0))
    assert np.any(a.beta_star > 0) or np.any(a.beta_star < 0)
    with pytest.raises(SpecMismatchError):
        gen_beta(BetaSpec("fixed", values=()), 5, 2, np.random.default_rng(0), 1.0)


def test_rpe_exact_value():
    x_test = np.array([[1.0, 0.0], [0.0, 2.0]])
    val = rpe([1.0, 0.5], [0.0, 0.5], x_test, sigma2=0.5)
    assert val == pytest.approx(1.0)
    val = rpe([0.0, 0.5], [0.0, 0.5], x_test, sigma2=0.5, intercept=1.0)
    assert val == pytest.approx(2.0)
    with pytest.raises(ValueError):
        rpe([0.0], [0.0], x_test[:, :1], 0.0)


def test_tp_fp_counts():
    beta_hat = [0.3, 0.0, 1e-12, -0.2]
    assert tp_fp(beta_hat, [0, 1]) == (1, 1)
    assert tp_fp(beta_hat, [0, 3]) == (2, 0)
    assert tp_fp([0.0, 0.0], [0]) == (0, 0)
    with pytest.raises(ValueError):
        tp_fp(beta_hat, [0], eps=-1.0)


def test_config_round_trip():
    cfg = _tiny_selection_config()
    restored = config_from_dict(config_to_dict(cfg))
    assert restored == cfg


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_parse(name):
    raw = json.loads(
        (resources.files("twostep") / "configs" / name).read_text()
    )
    cfg = config_from_dict(raw)
    assert config_from_dict(config_to_dict(cfg)) == cfg
    if cfg.mode == "prediction":
        assert cfg.lambda_rule.startswith("cv")


def test_config_error_messages():
    with pytest.raises(SpecMismatchError, match="missing config fields: .*sigma2"):
        config_from_dict({"name": "x", "mode": "selection"})
    raw = config_to_dict(_tiny_selection_config())
    raw["sigma2"] = -1.0
    with pytest.raises(SpecMismatchError, match="sigma2"):
        config_from_dict(raw)
    raw = config_to_dict(_tiny_selection_config())
    raw["methods"] = ["alasso"]
    with pytest.raises(SpecMismatchError, match="malformed config"):
        config_from_dict(raw)
    with pytest.raises(SpecMismatchError):
        config_from_dict("not a dict")


def test_config_validate_collects_fields():
    cfg = _tiny_selection_config(mode="prediction", lambda_rule="oracle", n_test=0)
    with pytest.raises(SpecMismatchError) as err:
        cfg.validate()
    assert "lambda_rule (prediction mode needs cv)" in str(err.value)
    assert "n_test" in str(err.value)
    with pytest.raises(SpecMismatchError, match="s "):
        _tiny_selection_config(s=9).validate()
    with pytest.raises(SpecMismatchError, match="inner_resample"):
        _tiny_selection_config(inner_resample="bootstrap").validate()


def test_cv_folds_parsing():
    assert _tiny_selection_config(lambda_rule="cv5").cv_folds == 5
    assert _tiny_selection_config(lambda_rule="cv10").cv_folds == 10
    assert _tiny_selection_config(lambda_rule="cv").cv_folds == 5
    with pytest.raises(SpecMismatchError):
        _tiny_selection_config(lambda_rule="oracle").cv_folds
    with pytest.raises(SpecMismatchError, match="fold count"):
        _tiny_selection_config(lambda_rule="cv1").validate()


def test_scale_config_floors_at_one():
    cfg = _tiny_selection_config(outer=10, inner=100)
    small = scale_config(cfg, 0.01)
    assert small.outer == 1 and small.inner == 1
    half = scale_config(cfg, 0.5)
    assert half.outer == 5 and half.inner == 50
    with pytest.raises(SpecMismatchError):
        scale_config(cfg, 0.0)


def test_selection_experiment_records():
    cfg = _tiny_selection_config()
    records = run_selection_experiment(cfg)
    assert len(records) == cfg.outer * len(cfg.methods)
    labels = {r.method for r in records}
    assert labels == {"lasso", "alasso-ols", "ht-ols"}
    for r in records:
        assert 0.0 <= r.success_rate <= 1.0
        assert np.isfinite(r.eta_inf), "fixed-design mode records eta"
        assert r.failures == 0
    # The signal here is strong; the oracle rule should find the model
    # on a clear majority of draws.
    mean_rate = np.mean([r.success_rate for r in records])
    assert mean_rate > 0.5


def test_selection_experiment_deterministic_across_workers():
    cfg = _tiny_selection_config(outer=2, inner=3)
    one = run_selection_experiment(cfg, workers=1)
    two = run_selection_experiment(cfg, workers=2)
    again = run_selection_experiment(cfg, workers=1)
    assert_same_records(one, again)
    assert_same_records(one, two)


def test_selection_experiment_skips_ols_when_wide():
    cfg = _tiny_selection_config(
        n=12,
        p=16,
        covariance=CovarianceSpec("ar", rho=0.2),
        outer=1,
        inner=2,
        methods=(parse_method("alasso-ols"), parse_method("ht-ridge")),
    )
    records = run_selection_experiment(cfg)
    by_label = {r.method: r for r in records}
    assert np.isnan(by_label["alasso-ols"].success_rate)
    assert np.isfinite(by_label["ht-ridge"].success_rate)


def test_selection_experiment_design_noise_mode():
    cfg = _tiny_selection_config(inner_resample="design_noise", outer=2, inner=2)
    records = run_selection_experiment(cfg)
    for r in records:
        assert np.isnan(r.eta_inf), "no single design to diagnose"
        assert 0.0 <= r.success_rate <= 1.0
    assert_same_records(run_selection_experiment(cfg), records)


def test_selection_experiment_rejects_wrong_mode():
    cfg = _tiny_selection_config()
    with pytest.raises(SpecMismatchError):
        run_prediction_experiment(cfg)


def _tiny_prediction_config():
    return ExperimentConfig(
        name="tinypred",
        mode="prediction",
        n=30,
        p=8,
        s=3,
        covariance=CovarianceSpec("ar", rho=0.5),
        beta=BetaSpec("fixed", values=(3.0, 1.5, -2.0)),
        sigma2=1.0,
        outer=3,
        inner=1,
        methods=(parse_method("lasso"), parse_method("alasso-ridge")),
        lambda_rule="cv3",
        seed=77,
        n_test=64,
        grid_size=25,
    )


def test_prediction_experiment_summary():
    cfg = _tiny_prediction_config()
    records, summary = run_prediction_experiment(cfg)
    assert len(records) == cfg.outer * len(cfg.methods)
    for label in ("lasso", "alasso-ridge"):
        entry = summary[label]
        assert entry["n_replications"] == cfg.outer
        assert entry["rpe_median"] >= 0.0
        assert np.isfinite(entry["rpe_se"])
        assert 0 <= entry["tp_median"] <= cfg.s
        assert entry["fp_median"] >= 0
    _, again = run_prediction_experiment(cfg)
    assert again == summary
    _, par = run_prediction_experiment(cfg, workers=2)
    assert par == summary
    with pytest.raises(SpecMismatchError):
        run_selection_experiment(cfg)


def test_selection_zero_sparsity_runs():
    cfg = _tiny_selection_config(
        s=0, beta=BetaSpec("fixed", values=()), outer=1, inner=2
    )
    records = run_selection_experiment(cfg)
    for r in records:
        assert np.isnan(r.eta_inf), "eta undefined without a proper support"
        assert 0.0 <= r.success_rate <= 1.0
