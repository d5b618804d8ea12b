"""Solvers: frozen hand examples, optimality checks, robustness."""

import numpy as np
import pytest

from loopsim.regressors import (
    SOLVER_HUBER_LINE,
    SOLVER_RIDGE_EXACT,
    SOLVER_RIDGE_REGULARIZED,
    SOLVER_SGD,
    TrainedModel,
    fit_huber_line,
    fit_ridge,
    fit_sgd,
    mse,
    predict,
)


def test_ridge_hand_example():
    # X=[[1],[2],[3]], y=[1,2,3], penalty 0.1 -> w=20/21, b=2/21
    X = np.array([[1.0], [2.0], [3.0]])
    y = np.array([1.0, 2.0, 3.0])
    m = fit_ridge(X, y, 0.1)
    assert m.weights[0] == pytest.approx(20.0 / 21.0, abs=1e-12)
    assert m.intercept == pytest.approx(2.0 / 21.0, abs=1e-12)
    assert m.solver == SOLVER_RIDGE_REGULARIZED


def test_ridge_zero_penalty_recovers_exact_line():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = 2.5 * X[:, 0] - 1.0
    m = fit_ridge(X, y, 0.0)
    assert m.weights[0] == pytest.approx(2.5, abs=1e-10)
    assert m.intercept == pytest.approx(-1.0, abs=1e-10)
    assert m.solver == SOLVER_RIDGE_EXACT


def test_ridge_is_the_penalized_minimizer():
    """Perturbing the solution must not lower the penalized objective."""
    rng = np.random.default_rng(5)
    X = rng.normal(size=(40, 3))
    y = rng.normal(size=40)
    lam = 0.7
    m = fit_ridge(X, y, lam)

    def objective(w, b):
        r = y - X @ w - b
        return r @ r + lam * (w @ w)

    base = objective(m.weights, m.intercept)
    for _ in range(25):
        dw = rng.normal(scale=1e-4, size=3)
        db = rng.normal(scale=1e-4)
        assert objective(m.weights + dw, m.intercept + db) >= base - 1e-9


def test_ridge_penalty_excludes_intercept():
    # constant shift of targets shifts only the intercept
    rng = np.random.default_rng(6)
    X = rng.normal(size=(60, 4))
    y = rng.normal(size=60)
    a = fit_ridge(X, y, 0.3)
    b = fit_ridge(X, y + 5.0, 0.3)
    assert np.allclose(a.weights, b.weights, atol=1e-10)
    assert b.intercept - a.intercept == pytest.approx(5.0, abs=1e-10)


def test_sgd_noiseless_line():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(200, 1))
    y = 2.0 * X[:, 0] + 1.0
    m = fit_sgd(X, y, max_iterations=50, seed=0)
    assert m.weights[0] == pytest.approx(2.0, abs=0.02)
    assert m.intercept == pytest.approx(1.0, abs=0.02)
    assert m.solver == SOLVER_SGD
    assert 1 <= m.iterations_used <= 50


def test_sgd_tracks_ridge_on_well_conditioned_data():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 5))
    w = rng.uniform(0, 3, size=5)
    y = X @ w + rng.normal(scale=0.1, size=400)
    sgd = fit_sgd(X, y, max_iterations=60, seed=3)
    exact = fit_ridge(X, y, 0.0)
    assert np.max(np.abs(sgd.weights - exact.weights)) < 0.05


def test_sgd_is_seed_deterministic():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 2))
    y = rng.normal(size=80)
    a = fit_sgd(X, y, max_iterations=20, seed=9)
    b = fit_sgd(X, y, max_iterations=20, seed=9)
    assert np.array_equal(a.weights, b.weights)
    assert a.intercept == b.intercept


def test_sgd_scale_equivariance():
    # scaling targets by c scales the fitted map by c exactly
    rng = np.random.default_rng(4)
    X = rng.normal(size=(100, 3))
    y = rng.normal(size=100)
    a = fit_sgd(X, y, max_iterations=30, seed=1)
    b = fit_sgd(X, 10.0 * y, max_iterations=30, seed=1)
    assert np.allclose(10.0 * a.weights, b.weights, rtol=1e-9)
    assert 10.0 * a.intercept == pytest.approx(b.intercept, rel=1e-9)


def test_huber_line_exact_on_clean_data():
    t = np.arange(12, dtype=float)
    v = -0.25 * t + 3.0
    m = fit_huber_line(t, v)
    assert m.weights[0] == pytest.approx(-0.25, abs=1e-9)
    assert m.intercept == pytest.approx(3.0, abs=1e-9)
    assert m.solver == SOLVER_HUBER_LINE


def test_huber_line_resists_one_outlier():
    t = np.arange(30, dtype=float)
    v = 0.5 * t + 1.0
    v_out = v.copy()
    v_out[7] += 50.0
    robust = fit_huber_line(t, v_out)
    # plain least squares would move the slope visibly; huber barely
    assert robust.weights[0] == pytest.approx(0.5, abs=0.02)


def test_predict_and_mse():
    m = TrainedModel(weights=np.array([2.0, -1.0]), intercept=0.5,
                     solver=SOLVER_RIDGE_EXACT, regularization=0.0,
                     iterations_used=0)
    X = np.array([[1.0, 1.0], [0.0, 2.0]])
    got = predict(m, X)
    assert np.allclose(got, [1.5, -1.5])
    assert mse(m, X, np.array([1.5, -1.5])) == 0.0
    assert mse(m, X, np.array([2.5, -1.5])) == pytest.approx(0.5)


def test_trained_model_json_dict():
    m = fit_ridge(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), 0.0)
    d = m.to_json_dict()
    assert d["solver"] == SOLVER_RIDGE_EXACT
    assert isinstance(d["weights"], list)


def test_fit_rejects_mismatched_lengths():
    with pytest.raises(ValueError):
        fit_ridge(np.zeros((3, 2)), np.zeros(4), 0.1)
    with pytest.raises(ValueError):
        fit_sgd(np.zeros((3, 2)), np.zeros(4))
