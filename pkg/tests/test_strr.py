import numpy as np
import pytest
import scipy.linalg

from tvode.strr import RankDeficientError, SparseFit, StrrConfig, ridge_solve, strr_fit, threshold


def test_ridge_identity_shrinks_by_one_plus_lambda():
    y = np.array([2.0, -1.0, 0.5])
    for lam in (0.0, 0.01, 1.0):
        got = ridge_solve(np.eye(3), y, lam)
        assert np.allclose(got, y / (1.0 + lam))


def test_ridge_zero_matches_exact_least_squares():
    rng = np.random.default_rng(0)
    theta = rng.normal(size=(40, 6))
    y = rng.normal(size=40)
    exact, *_ = np.linalg.lstsq(theta, y, rcond=None)
    assert np.allclose(ridge_solve(theta, y, 0.0), exact, atol=1e-10)


def test_singular_system_without_ridge_raises():
    theta = np.column_stack([np.ones(10), np.ones(10)])
    with pytest.raises(RankDeficientError):
        ridge_solve(theta, np.arange(10.0), 0.0)
    out = ridge_solve(theta, np.arange(10.0), 0.01)
    assert np.all(np.isfinite(out))


def test_ridge_solve_validates_shapes():
    with pytest.raises(ValueError):
        ridge_solve(np.ones(5), np.ones(5), 0.1)
    with pytest.raises(ValueError):
        ridge_solve(np.ones((5, 2)), np.ones(4), 0.1)


def test_threshold_is_strict():
    coef = np.array([0.5, -0.001, 0.001, 0.0009, -0.0009])
    out = threshold(coef, 0.001)
    assert np.array_equal(out, [0.5, -0.001, 0.001, 0.0, 0.0])


def test_zero_target_converges_fast():
    rng = np.random.default_rng(1)
    theta = rng.normal(size=(50, 4))
    fit = strr_fit(theta, np.zeros(50))
    assert fit.converged
    assert fit.iterations <= 2
    assert np.array_equal(fit.coef, np.zeros(4))


def test_threshold_above_everything_prunes_all_terms():
    rng = np.random.default_rng(2)
    theta = rng.normal(size=(50, 4))
    y = theta @ np.array([0.3, 0.0, -0.2, 0.1])
    with pytest.warns(RuntimeWarning):
        fit = strr_fit(theta, y, StrrConfig(threshold=1e6))
    assert fit.all_terms_pruned
    assert fit.converged
    assert not fit.active.any()
    assert np.array_equal(fit.coef, np.zeros(4))


def test_recovers_sparse_coefficients_on_random_design():
    rng = np.random.default_rng(3)
    theta = rng.normal(size=(300, 10))
    truth = np.zeros(10)
    truth[[1, 4, 7]] = [1.5, -0.8, 0.3]
    fit = strr_fit(theta, theta @ truth, StrrConfig(ridge=1e-8, threshold=0.05))
    assert np.array_equal(fit.active, truth != 0.0)
    assert np.allclose(fit.coef, truth, atol=1e-6)


def test_support_only_shrinks_and_survivors_are_refit():
    rng = np.random.default_rng(4)
    theta = rng.normal(size=(200, 6))
    truth = np.array([0.0, 2.0, 0.0, -1.0, 0.0, 0.5])
    fit = strr_fit(theta, theta @ truth, StrrConfig(ridge=1e-10, threshold=0.1))
    assert fit.active.sum() == 3
    kept = ridge_solve(theta[:, fit.active], theta @ truth, 1e-10)
    assert np.array_equal(fit.coef[fit.active], kept)


def test_warm_start_restricts_the_initial_support():
    rng = np.random.default_rng(5)
    theta = rng.normal(size=(100, 5))
    truth = np.array([1.0, 0.0, 0.5, 0.0, -0.7])
    y = theta @ truth
    start = np.array([0.9, 0.0, 0.4, 0.0, -0.6])
    fit = strr_fit(theta, y, StrrConfig(ridge=1e-10, threshold=0.01), warm_start=start)
    assert np.array_equal(fit.active, start != 0.0)
    assert np.allclose(fit.coef, truth, atol=1e-8)
    with pytest.raises(ValueError):
        strr_fit(theta, y, warm_start=np.ones(4))


def test_config_validation():
    with pytest.raises(ValueError):
        StrrConfig(ridge=-0.1)
    with pytest.raises(ValueError):
        StrrConfig(threshold=-1.0)
    with pytest.raises(ValueError):
        StrrConfig(tol=0.0)
    with pytest.raises(ValueError):
        StrrConfig(max_iter=0)


def test_max_iter_reached_reports_not_converged():
    rng = np.random.default_rng(6)
    theta = rng.normal(size=(60, 5))
    y = rng.normal(size=60)
    fit = strr_fit(theta, y, StrrConfig(max_iter=1, threshold=0.0))
    assert isinstance(fit, SparseFit)
    assert not fit.converged
    assert fit.iterations == 1


def test_unregularized_unthresholded_fit_matches_qr_oracle():
    rng = np.random.default_rng(3)
    config = StrrConfig(ridge=0.0, threshold=0.0)
    worst = 0.0
    for _ in range(50):
        n_terms = int(rng.integers(5, 21))
        theta = rng.standard_normal((200, n_terms))
        y = rng.standard_normal(200)
        fit = strr_fit(theta, y, config)
        q, r = np.linalg.qr(theta)
        oracle = scipy.linalg.solve_triangular(r, q.T @ y)
        worst = max(worst, float(np.max(np.abs(fit.coef - oracle))))
    assert worst < 1e-9
