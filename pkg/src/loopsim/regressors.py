"""In-house linear-model fitters.

Three solver families drive the loop simulations (per-sample SGD, exact
ridge via Cholesky on the normal equations, ridge with a fixed penalty)
plus a robust Huber line fitter used by the autonomy diagnostics. All
fitters model an unpenalized intercept and are deterministic functions of
their inputs.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

SOLVER_SGD = "sgd"
SOLVER_RIDGE_EXACT = "ridge_exact"
SOLVER_RIDGE_REGULARIZED = "ridge_regularized"
SOLVER_HUBER_LINE = "huber_line"

DEFAULT_RIDGE_PENALTY = 0.1

# SGD schedule: eta_t = eta0 / (1 + decay * t) with t the global update
# counter. The loop dynamics only need a consistent approximate minimizer,
# not a tuned one.
SGD_ETA0 = 0.01
SGD_DECAY = 1e-3


@dataclass(frozen=True)
class TrainedModel:
    """Fitted linear model: y ~ X @ weights + intercept."""

    weights: np.ndarray
    intercept: float
    solver: str
    regularization: float = 0.0
    iterations_used: int = 0

    def to_json_dict(self) -> dict:
        return {
            "weights": [float(v) for v in self.weights],
            "intercept": float(self.intercept),
            "solver": self.solver,
            "regularization": float(self.regularization),
        }


def _as_xy(features, targets):
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2:
        raise ValueError("features must be a 2-d matrix")
    if y.shape != (X.shape[0],):
        raise ValueError(f"targets shape {y.shape} does not match {X.shape[0]} rows")
    return X, y


def fit_sgd(
    features,
    targets,
    max_iterations: int = 50,
    seed: int = 0,
    eta0: float = SGD_ETA0,
    decay: float = SGD_DECAY,
) -> TrainedModel:
    """Squared-loss linear fit by per-sample SGD with shuffled passes.

    Pass order is a fresh permutation per epoch from a generator seeded by
    ``seed``, so the fit is a deterministic function of (data, seed,
    max_iterations). Never raises on degenerate data; returns the
    best-effort parameters instead.
    """
    X, y = _as_xy(features, targets)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    rng = np.random.default_rng(seed)
    m, d = X.shape
    w = np.zeros(d)
    b = 0.0
    t = 0
    epochs = 0
    for _ in range(max_iterations):
        order = rng.permutation(m)
        w_prev, b_prev = w.copy(), b
        for i in order:
            eta = eta0 / (1.0 + decay * t)
            xi = X[i]
            err = xi @ w + b - y[i]
            w -= eta * err * xi
            b -= eta * err
            t += 1
        epochs += 1
        # stop early once a full pass no longer moves the parameters
        if max(np.max(np.abs(w - w_prev)), abs(b - b_prev)) < 1e-12:
            break
    return TrainedModel(w, float(b), SOLVER_SGD, 0.0, epochs)


def fit_ridge(features, targets, regularization: float = 0.0) -> TrainedModel:
    """Exact minimizer of ||y - Xw - b||^2 + regularization * ||w||^2.

    Solved in closed form: center X and y, Cholesky-solve the regularized
    normal equations for w, recover the intercept from the means. With
    regularization 0 this is ordinary least squares and raises if the
    centered Gram matrix is rank deficient.
    """
    X, y = _as_xy(features, targets)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 training rows")
    if regularization < 0:
        raise ValueError("regularization must be nonnegative")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    yc = y - y_mean
    gram = Xc.T @ Xc + regularization * np.eye(X.shape[1])
    try:
        w = cho_solve(cho_factor(gram), Xc.T @ yc)
    except np.linalg.LinAlgError as exc:
        rank = np.linalg.matrix_rank(Xc)
        raise ValueError(
            f"normal matrix is singular at regularization 0: centered feature rank "
            f"{rank} < {X.shape[1]} columns"
        ) from exc
    b = y_mean - x_mean @ w
    solver = SOLVER_RIDGE_EXACT if regularization == 0 else SOLVER_RIDGE_REGULARIZED
    return TrainedModel(w, float(b), solver, float(regularization), 1)


def fit_huber_line(ts, vs, delta: float = 1.35) -> TrainedModel:
    """Robust line fit v ~ slope * t + intercept under Huber loss.

    Iteratively reweighted least squares: weight 1 for residuals within
    ``delta``, delta/|r| beyond. Converged when the parameter change drops
    below 1e-10, capped at 100 iterations.
    """
    t = np.asarray(ts, dtype=float)
    v = np.asarray(vs, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise ValueError("ts and vs must be equal-length 1-d sequences")
    if t.size < 3:
        raise ValueError("need at least 3 points")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if np.ptp(t) == 0:
        raise ValueError("all abscissae identical: slope undefined")

    slope, intercept = 0.0, float(np.mean(v))
    iterations = 0
    for iterations in range(1, 101):
        resid = v - (slope * t + intercept)
        weights = np.ones_like(resid)
        mask = np.abs(resid) > delta
        weights[mask] = delta / np.abs(resid[mask])
        sw = weights.sum()
        t_bar = (weights * t).sum() / sw
        v_bar = (weights * v).sum() / sw
        var_t = (weights * (t - t_bar) ** 2).sum()
        cov_tv = (weights * (t - t_bar) * (v - v_bar)).sum()
        new_slope = cov_tv / var_t
        new_intercept = v_bar - new_slope * t_bar
        change = max(abs(new_slope - slope), abs(new_intercept - intercept))
        slope, intercept = new_slope, new_intercept
        if change < 1e-10:
            break
    return TrainedModel(np.array([slope]), float(intercept), SOLVER_HUBER_LINE, 0.0, iterations)


def predict(model: TrainedModel, features) -> np.ndarray:
    """Row-wise X @ weights + intercept."""
    X = np.asarray(features, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"feature count {X.shape[1]} does not match model dimension {model.weights.shape[0]}"
        )
    return X @ model.weights + model.intercept


def mse(model: TrainedModel, features, targets) -> float:
    """Mean squared residual of the model over an evaluation set."""
    X, y = _as_xy(features, targets)
    if X.shape[0] < 1:
        raise ValueError("evaluation set is empty")
    r = y - predict(model, X)
    return float(np.mean(r * r))
