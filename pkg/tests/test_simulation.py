import numpy as np
import pytest
from scipy.special import ndtr

from gerbil.errors import DataError
from gerbil.metrics import fit_logistic
from gerbil.simulation import (
    ALL_PARAMS,
    COEF_PARAMS,
    COV_PARAMS,
    MEAN_PARAMS,
    SE2_PARAMS,
    VAR_PARAMS,
    GeneratorParams,
    SimConfig,
    analysis_estimates,
    generate_dataset,
    impose_missingness,
    missingness_params,
    run_study,
    true_means,
)


def rng_(seed=0):
    return np.random.default_rng(seed)


def big_sample(seed=0, n=100_000):
    return generate_dataset(GeneratorParams(n=n), rng_(seed))


def test_category_marginals_are_uniform():
    ds = big_sample()
    code = ds.values[:, 0]
    for c in range(1, 5):
        assert np.mean(code == c) == pytest.approx(0.25, abs=0.02)


def test_noise_block_correlation():
    ds = big_sample(1)
    params = GeneratorParams()
    shift = np.asarray(params.category_shift)[ds.values[:, 0].astype(int) - 1]
    psi2 = ds.values[:, 1] - shift  # X2 minus its category shift
    psi3 = ds.values[:, 2] - shift
    assert np.corrcoef(psi2, psi3)[0, 1] == pytest.approx(0.5, abs=0.02)
    assert psi2.var() == pytest.approx(1.0, abs=0.02)


def test_threshold_variables_match_analytic_oracle():
    ds = big_sample(2)
    x4 = ds.values[:, 3]
    x5 = ds.values[:, 4]
    x6 = ds.values[:, 5]
    gamma = np.asarray(GeneratorParams().category_shift)
    # mixture over equally likely categories, each latent N(shift, 1)
    p4 = np.mean(ndtr(0.0 - gamma))
    assert x4.mean() == pytest.approx(p4, abs=0.02)
    p5_2 = np.mean(ndtr(0.0 - gamma) - ndtr(-1.5 - gamma))
    assert np.mean(x5 == 2) == pytest.approx(p5_2, abs=0.02)
    assert x6.mean() == pytest.approx(0.5, abs=0.02)


def test_mcar_rate_is_one_third_and_x2_complete():
    ds = big_sample(3)
    masked = impose_missingness(ds, ds, missingness_params("mcar"), rng_(4))
    for name in ("X1", "X3", "X4", "X5", "X6"):
        j = masked.column_index(name)
        assert (~masked.observed[:, j]).mean() == pytest.approx(1 / 3, abs=0.01)
    assert masked.observed[:, masked.column_index("X2")].all()


def test_mar_missingness_depends_on_x2_with_derived_slope():
    ds = big_sample(5)
    masked = impose_missingness(ds, ds, missingness_params("mar"), rng_(6))
    r3 = (~masked.observed[:, masked.column_index("X3")]).astype(float)
    x2 = ds.values[:, ds.column_index("X2")]
    coef, se2 = fit_logistic(r3, np.column_stack([np.ones(ds.n), x2]))
    # under the implemented sign convention the response-model slope is the
    # negated coefficient: logit P(missing) = -(log 2 + 1 * X2)
    assert abs(coef[1] - (-1.0)) < 3 * np.sqrt(se2[1])
    assert abs(coef[0] - (-np.log(2.0))) < 3 * np.sqrt(se2[0])


def test_nmar_missingness_depends_on_the_masked_values():
    ds = big_sample(100)
    masked = impose_missingness(ds, ds, missingness_params("nmar"), rng_(200))
    r3 = (~masked.observed[:, masked.column_index("X3")]).astype(float)
    x3 = ds.values[:, ds.column_index("X3")]
    coef, se2 = fit_logistic(r3, np.column_stack([np.ones(ds.n), x3]))
    assert abs(coef[1] - (-1.0)) < 3 * np.sqrt(se2[1])


def test_masked_dataset_agrees_with_truth_where_observed():
    ds = big_sample(9, n=5000)
    masked = impose_missingness(ds, ds, missingness_params("nmar"), rng_(10))
    assert np.array_equal(masked.values[masked.observed], ds.values[masked.observed])


def test_unknown_mechanism_rejected():
    with pytest.raises(DataError):
        missingness_params("mnar-ish")


def test_tracked_parameter_counts():
    assert len(MEAN_PARAMS) == 8
    assert len(VAR_PARAMS) == 8
    assert len(COV_PARAMS) == 36
    assert len(COEF_PARAMS) == 40
    assert len(SE2_PARAMS) == 40
    assert len(ALL_PARAMS) == len(set(ALL_PARAMS)) == 132


def test_analysis_estimates_cover_every_parameter():
    ds = generate_dataset(GeneratorParams(n=800), rng_(11))
    est = analysis_estimates(ds.values)
    assert set(est) == set(ALL_PARAMS)
    for name in MEAN_PARAMS + COEF_PARAMS:
        assert est[name][1] is not None and est[name][1] >= 0
    for name in VAR_PARAMS + COV_PARAMS + SE2_PARAMS:
        assert est[name][1] is None


def test_true_means_are_the_analytic_values():
    truths = true_means()
    assert truths["mean[X1=1]"] == 0.25
    assert truths["mean[X3]"] == 0.0
    assert truths["mean[X4]"] == 0.5
    assert truths["mean[X5]"] == 2.5
    assert truths["mean[X6]"] == 0.5


def smoke_config(**kw):
    base = dict(
        mechanism="mcar",
        replications=1,
        n=150,
        m=2,
        burn_in=3,
        seed=5,
        truth_n=5000,
        jobs=1,
    )
    base.update(kw)
    return SimConfig(**base)


def test_run_study_smoke_has_complete_skeleton(tmp_path):
    report = run_study(smoke_config())
    assert report.completed == 1
    assert report.failures == []
    assert set(report.rmse) == set(ALL_PARAMS)
    assert set(report.coverage) == set(MEAN_PARAMS + COEF_PARAMS)
    for value in report.coverage.values():
        assert 0.0 <= value <= 1.0
    files = report.write(tmp_path)
    names = {f.name for f in files}
    assert names == {
        "means.csv",
        "variances.csv",
        "covariances.csv",
        "coefficients.csv",
        "squared_se.csv",
        "summary.txt",
    }
    means_lines = (tmp_path / "means.csv").read_text().strip().splitlines()
    assert means_lines[0] == "parameter,truth,rmse,coverage"
    assert len(means_lines) == 9


def test_run_study_deterministic():
    a = run_study(smoke_config(replications=2))
    b = run_study(smoke_config(replications=2))
    assert a.summary_text() == b.summary_text()


def test_run_study_parallel_matches_serial():
    serial = run_study(smoke_config(replications=3))
    parallel = run_study(smoke_config(replications=3, jobs=2))
    assert serial.summary_text() == parallel.summary_text()


def test_run_study_records_failed_replications(monkeypatch):
    import gerbil.simulation as sim

    real_impute = sim.impute
    calls = {"n": 0}

    def flaky(dataset, config, **kw):
        calls["n"] += 1
        if calls["n"] == 2:
            raise DataError("synthetic failure for testing")
        return real_impute(dataset, config, **kw)

    monkeypatch.setattr(sim, "impute", flaky)
    report = run_study(smoke_config(replications=3))
    assert report.completed == 2
    assert len(report.failures) == 1
    assert report.failures[0][0] == 1
    assert "synthetic failure" in report.failures[0][1]
    assert "failed" in report.summary_text()
