import math

import numpy as np
import pytest
from oracles import brute_force_lasso

from hdboot.errors import DegenerateCoordinateError, InvalidDataError, NonConvergenceError
from hdboot.lasso import (LassoFit, RegressionData, kkt_violation, lasso_fit, lasso_objective,
                          penalty_heteroscedastic, penalty_homoscedastic, prediction_norm, rlasso_pipeline,
                          soft_threshold, sup_score_test)


def test_soft_threshold_examples():
    assert soft_threshold(2.0, 0.5) == 1.5
    assert soft_threshold(-0.3, 0.5) == 0.0
    for z in (-4.2, 0.0, 3.3):
        assert soft_threshold(z, 0.0) == z
    np.testing.assert_array_equal(soft_threshold(np.array([-2.0, 0.1, 2.0]), 1.0), [-1.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_lasso_scalar_example():
    fit = lasso_fit(RegressionData(np.full(10, 2.0), np.ones((10, 1))), 1.0)
    assert fit.beta[0] == pytest.approx(1.5, abs=1e-12)
    assert fit.objective == pytest.approx(lasso_objective(np.ones((10, 1)), np.full(10, 2.0), fit.beta, 1.0))


def test_lasso_zero_penalty_orthonormal_is_least_squares():
    rng = np.random.default_rng(0)
    n = 40
    Q, _ = np.linalg.qr(rng.normal(size=(n, 3)))
    X = Q * math.sqrt(n)
    y = rng.normal(size=n)
    fit = lasso_fit(RegressionData(y, X), 0.0)
    np.testing.assert_allclose(fit.beta, np.linalg.lstsq(X, y, rcond=None)[0], atol=1e-9)


def test_lasso_zero_threshold():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 5))
    y = rng.normal(size=30)
    # a relative 1e-12 margin absorbs summation-order differences in x_j'y
    lam0 = 2.0 * np.abs(X.T @ y / 30).max() * (1 + 1e-12)
    assert np.all(lasso_fit(RegressionData(y, X), lam0).beta == 0.0)
    assert np.any(lasso_fit(RegressionData(y, X), 0.99 * lam0).beta != 0.0)
    # 1-D check against brute force just above and below the threshold
    x = X[:, :1]
    l1 = 2.0 * abs(float(x[:, 0] @ y) / 30)
    assert brute_force_lasso(x, y, l1 * 1.001)[0] == pytest.approx(0.0, abs=1e-7)
    assert lasso_fit(RegressionData(y, x), l1 * 1.001).beta[0] == 0.0


def test_lasso_matches_brute_force_small():
    rng = np.random.default_rng(7)
    for _ in range(15):
        p = int(rng.integers(1, 3))
        n = int(rng.integers(5, 30))
        X = rng.normal(size=(n, p))
        y = X @ rng.normal(size=p) + rng.normal(size=n)
        lam = float(rng.uniform(0, 1.5))
        np.testing.assert_allclose(lasso_fit(RegressionData(y, X), lam, tol=1e-12).beta,
                                   brute_force_lasso(X, y, lam), atol=1e-6)


def test_kkt_and_monotone_objective():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(60, 30))
    beta = np.zeros(30)
    beta[:3] = [2.0, -1.5, 1.0]
    y = X @ beta + rng.normal(size=60)
    fit = lasso_fit(RegressionData(y, X), 0.2, tol=1e-10)
    assert kkt_violation(X, y, fit.beta, 0.2) < 1e-6
    objs = [lasso_fit(RegressionData(y, X), 0.2, max_iter=10 ** 4, tol=t).objective for t in (1e-1, 1e-3, 1e-6, 1e-10)]
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


def test_objective_nonincreasing_over_sweeps():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 25))
    y = X[:, :4] @ np.ones(4) + rng.normal(size=40)
    d = RegressionData(y, X)
    objs = []
    for k in range(1, 12):
        try:
            objs.append(lasso_fit(d, 0.1, tol=0.0, max_iter=k).objective)
        except NonConvergenceError as e:
            assert isinstance(e.last, LassoFit)
            objs.append(e.last.objective)
    assert all(b <= a + 1e-12 for a, b in zip(objs, objs[1:]))


def test_nonconvergence_carries_last_iterate():
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 10))
    y = rng.normal(size=40)
    with pytest.raises(NonConvergenceError) as e:
        lasso_fit(RegressionData(y, X), 0.01, tol=0.0, max_iter=3)
    assert e.value.last.iterations == 3


def test_loadings_equal_rescaled_problem():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(50, 6)) * np.array([1, 2, 3, 0.5, 5, 1])
    y = X[:, 0] + rng.normal(size=50)
    w = np.sqrt((X ** 2).mean(axis=0))
    a = lasso_fit(RegressionData(y, X), 0.3, tol=1e-12, loadings=w).beta
    b = lasso_fit(RegressionData(y, X / w), 0.3, tol=1e-12).beta / w
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_regression_data_validation(tmp_path):
    with pytest.raises(InvalidDataError):
        RegressionData(np.ones(3), np.ones((4, 2)))
    path = tmp_path / "d.csv"
    path.write_text("y,x1,x2\n1,2,3\n4,5,6\n7,8,9\n")
    d = RegressionData.from_csv(path)
    np.testing.assert_array_equal(d.y, [1, 4, 7])
    assert d.X.shape == (3, 2)
    path.write_text("1,2,3\n4,5,6\n")
    with pytest.raises(InvalidDataError):
        RegressionData.from_csv(path)
    c = d.centered()
    assert abs(c.y.mean()) < 1e-15 and np.allclose(c.X.mean(axis=0), 0)


def test_penalty_homoscedastic_p1():
    lam = penalty_homoscedastic(np.ones((100, 1)), 1.0, 0.1, 100_000, 3)
    # 2|N(0,1)|/10 has 0.9-quantile 2*1.644853627/10
    target = 2 * 1.6448536269514722 / 10
    # sd of a sample quantile: sqrt(q(1-q)/B) / density at the quantile
    dens = 2 * math.exp(-1.6448536269514722 ** 2 / 2) / math.sqrt(2 * math.pi) * 10 / 2
    assert abs(lam - target) < 3 * math.sqrt(0.09 / 100_000) / dens


def test_penalty_homogeneity_and_monotonicity():
    X = np.random.default_rng(0).normal(size=(80, 20))
    a = penalty_homoscedastic(X, 1.0, 0.1, 999, 4)
    assert penalty_homoscedastic(X, 2.0, 0.1, 999, 4) == pytest.approx(2 * a, rel=1e-14)
    assert penalty_homoscedastic(X, 1.0, 0.05, 999, 4) >= a
    assert penalty_heteroscedastic(X, np.full(80, 1.0), 0.1, 999, 4) == a
    assert penalty_heteroscedastic(X, np.full(80, 3.0), 0.1, 999, 4) == penalty_homoscedastic(X, 3.0, 0.1, 999, 4)
    e = np.random.default_rng(1).normal(size=80)
    h = penalty_heteroscedastic(X, e, 0.1, 999, 4)
    assert penalty_heteroscedastic(X, 2.5 * e, 0.1, 999, 4) == pytest.approx(2.5 * h, rel=1e-13)
    with pytest.raises(DegenerateCoordinateError):
        penalty_heteroscedastic(X, np.zeros(80))
    with pytest.raises(ValueError):
        penalty_homoscedastic(X, 0.0)


def test_penalty_heteroscedastic_p1_definition():
    e = np.random.default_rng(4).normal(size=50)
    lam = penalty_heteroscedastic(np.ones((50, 1)), e, 0.1, 4000, 2)
    from hdboot import _rng
    from hdboot.bootstrap import conditional_quantile
    vals = []
    for k, s, t in _rng.blocks(4000):
        W = _rng.stream(2, _rng.TAG_BOOT, k).standard_normal((t - s, 50))
        vals.append(2 * np.abs(W @ e / 50))
    assert lam == conditional_quantile(np.concatenate(vals), 0.9).value


def test_rlasso_trace_and_refinements():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(100, 40))
    y = X[:, :2] @ np.array([1.0, -1.0]) + rng.normal(size=100)
    d = RegressionData(y, X)
    fit = rlasso_pipeline(d, refinements=1, B=499, seed=1)
    assert len(fit.lambda_trace) == 2
    # one refinement is: crude fit, then one re-selection, then the final fit
    scale = np.sqrt((X ** 2).mean(axis=0))
    lam0 = penalty_homoscedastic(X / scale, np.std(y, ddof=1), 0.1, 499, 1)
    crude = lasso_fit(d, lam0, loadings=scale)
    lam1 = penalty_heteroscedastic(X / scale, y - X @ crude.beta, 0.1, 499, 1)
    assert fit.lambda_trace == [lam0, lam1]
    np.testing.assert_allclose(fit.beta, lasso_fit(d, lam1, loadings=scale, beta0=crude.beta).beta, atol=1e-12)
    assert len(rlasso_pipeline(d, refinements=3, B=199, seed=1).lambda_trace) == 4
    with pytest.raises(ValueError):
        rlasso_pipeline(d, refinements=0)


def test_rlasso_noiseless_recovers_support():
    rng = np.random.default_rng(11)
    for _ in range(5):
        X = rng.normal(size=(200, 50))
        beta = np.zeros(50)
        beta[[3, 17, 41]] = [3.0, -3.0, 3.0]
        fit = rlasso_pipeline(RegressionData(X @ beta, X), B=499, seed=2)
        assert {3, 17, 41} <= set(fit.active_set.tolist())


def test_rlasso_null_mostly_empty():
    # beta* = 0 with t5 errors: the fit should be empty in about 1 - alpha of draws
    rng = np.random.default_rng(12)
    reps, zero = 500, 0
    for r in range(reps):
        X = rng.normal(size=(100, 200))
        e = rng.standard_t(5, 100) / math.sqrt(5 / 3)
        zero += not np.any(rlasso_pipeline(RegressionData(e, X), B=199, seed=r).beta)
    assert zero / reps >= 1 - 0.1 - 0.03


def test_sup_score_examples():
    X = np.random.default_rng(0).normal(size=(40, 10))
    r = sup_score_test(RegressionData(np.zeros(40), X), B=199, seed=1)
    assert r.statistic == 0 and not r.reject
    y = np.random.default_rng(1).normal(size=40)
    a = sup_score_test(RegressionData(y, X), B=199, seed=1)
    b = sup_score_test(RegressionData(7.0 * y, X), B=199, seed=1)
    assert b.statistic == pytest.approx(7 * a.statistic) and b.critical_value == pytest.approx(7 * a.critical_value)
    assert a.reject == b.reject
    strong = sup_score_test(RegressionData(X[:, 0] * 3 + y, X), B=199, seed=1)
    assert strong.reject


def test_prediction_norm():
    X = np.array([[1.0, 0.0], [0.0, 2.0]])
    assert prediction_norm(X, [3.0, 1.0]) == pytest.approx(math.sqrt((9 + 4) / 2))
