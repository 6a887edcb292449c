import numpy as np
import pytest
from scipy.stats import t as t_dist

from gerbil.errors import EstimationError
from gerbil.metrics import ci_covers, fit_linear, fit_logistic, pool, rmse


def test_pool_hand_example():
    p = pool([0.0, 2.0], [1.0, 1.0])
    assert p.qbar == 1.0
    assert p.within == 1.0
    assert p.between == 2.0
    assert p.total == 4.0
    assert p.df == pytest.approx(16 / 9)


def test_pool_degenerate_between_variance():
    p = pool([1.5] * 5, [0.3] * 5)
    assert p.between == 0.0
    assert p.total == 0.3
    assert np.isinf(p.df)


def test_pool_permutation_invariant():
    rng = np.random.default_rng(0)
    est = rng.standard_normal(7)
    var = rng.random(7)
    a = pool(est, var)
    order = rng.permutation(7)
    b = pool(est[order], var[order])
    assert a.qbar == pytest.approx(b.qbar)
    assert a.total == pytest.approx(b.total)
    assert a.df == pytest.approx(b.df)


def test_pool_requires_two_imputations():
    with pytest.raises(EstimationError):
        pool([1.0], [1.0])


def test_ci_covers_center_and_zero_width():
    p = pool([1.0, 1.0], [0.0, 0.0])
    assert ci_covers(p, 1.0)
    assert not ci_covers(p, 1.0001)


def test_ci_covers_hand_example_with_t_quantile():
    p = pool([0.0, 2.0], [1.0, 1.0])
    # interval is 1 +- t_{0.975, 16/9} * 2, wide enough for the truth 1
    assert ci_covers(p, 1.0, alpha=0.05)
    half = t_dist.ppf(0.975, 16 / 9) * 2.0
    assert ci_covers(p, 1.0 + half * 0.99)
    assert not ci_covers(p, 1.0 + half * 1.01)


def test_rmse_examples():
    assert rmse([3.0, 3.0], 3.0) == 0.0
    assert rmse([0.0, 2.0], 1.0) == 1.0
    assert rmse([1.0, 1.0, 4.0], 2.0) == pytest.approx(np.sqrt(2.0))


def test_rmse_translation_consistent():
    rng = np.random.default_rng(1)
    est = rng.standard_normal(20)
    assert rmse(est + 5.0, 2.0 + 5.0) == pytest.approx(rmse(est, 2.0))


def test_fit_linear_exact_and_intercept_only():
    rng = np.random.default_rng(2)
    x = np.column_stack([np.ones(30), rng.standard_normal(30)])
    c = np.array([2.0, -1.0])
    coef, se2 = fit_linear(x @ c, x)
    assert np.allclose(coef, c, atol=1e-10)
    assert np.allclose(se2, 0.0, atol=1e-18)

    y = rng.standard_normal(50)
    coef, se2 = fit_linear(y, np.ones((50, 1)))
    assert coef[0] == pytest.approx(y.mean())
    assert se2[0] == pytest.approx(y.var(ddof=1) / 50)


def test_fit_linear_matches_direct_solve():
    rng = np.random.default_rng(3)
    x = np.column_stack([np.ones(80), rng.standard_normal((80, 3))])
    y = rng.standard_normal(80)
    coef, se2 = fit_linear(y, x)
    xtx_inv = np.linalg.inv(x.T @ x)
    ref = xtx_inv @ x.T @ y
    resid = y - x @ ref
    s2 = resid @ resid / (80 - 4)
    assert np.allclose(coef, ref, atol=1e-8)
    assert np.allclose(se2, s2 * np.diag(xtx_inv), atol=1e-8)


def test_fit_linear_rank_deficiency():
    x = np.column_stack([np.ones(20), np.ones(20)])
    with pytest.raises(EstimationError):
        fit_linear(np.arange(20.0), x)


def test_fit_logistic_null_model():
    rng = np.random.default_rng(4)
    x = np.column_stack([np.ones(4000), rng.standard_normal(4000)])
    y = (rng.random(4000) < 0.5).astype(float)
    coef, se2 = fit_logistic(y, x)
    assert abs(coef[1]) < 0.1
    assert (se2 > 0).all()


def test_fit_logistic_intercept_only_closed_form():
    y = np.array([1.0, 1.0, 0.0] * 30)
    coef, se2 = fit_logistic(y, np.ones((90, 1)))
    assert coef[0] == pytest.approx(np.log(2.0), abs=1e-8)
    # observed information for the intercept is n p (1 - p)
    assert se2[0] == pytest.approx(1 / (90 * (2 / 3) * (1 / 3)), abs=1e-8)


def test_fit_logistic_recovers_known_coefficients():
    rng = np.random.default_rng(5)
    n = 60_000
    x = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
    truth = np.array([-0.3, 0.8, -0.5])
    prob = 1 / (1 + np.exp(-(x @ truth)))
    y = (rng.random(n) < prob).astype(float)
    coef, se2 = fit_logistic(y, x)
    assert np.all(np.abs(coef - truth) < 3 * np.sqrt(se2))


def test_fit_logistic_reports_separation():
    x = np.column_stack([np.ones(40), np.linspace(-1, 1, 40)])
    y = (x[:, 1] > 0).astype(float)
    with pytest.raises(EstimationError):
        fit_logistic(y, x)
