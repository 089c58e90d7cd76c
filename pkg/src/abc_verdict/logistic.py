"""Weighted binary logistic regression fitted by IRLS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

MAX_ITER = 50
GRAD_TOL = 1e-8
RIDGE = 1e-8
PROB_CLAMP = 1e-6


class LogisticConvergenceError(RuntimeError):
    def __init__(self, message: str, coef: np.ndarray):
        super().__init__(message)
        self.coef = coef


@dataclass(frozen=True)
class LogisticFit:
    prob: float  # fitted P(y=1) at the query point, clamped
    coef: np.ndarray  # intercept first, on the standardized kept columns
    kept_columns: np.ndarray
    iterations: int
    separated: bool


def fit_weighted_logistic(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    query: np.ndarray | None = None,
    max_iter: int = MAX_ITER,
    grad_tol: float = GRAD_TOL,
    ridge: float = RIDGE,
) -> LogisticFit:
    """Fit P(y=1|x) = expit(b0 + x.b) by weighted IRLS and evaluate it at ``query``.

    Rows with zero weight are ignored. Covariates whose weighted spread is
    zero are dropped before fitting: they are collinear with the intercept and
    the ridge would otherwise split the intercept between them. Complete
    separation (the fit classifies every row correctly, or a single class) is
    reported through ``separated``; the returned probability is always clamped
    to [1e-6, 1 - 1e-6].
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    query = np.zeros(X.shape[1]) if query is None else np.asarray(query, dtype=np.float64)
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    live = w > 0
    if not live.any():
        raise ValueError("all weights are zero")
    X, y, w = X[live], y[live], w[live] / w[live].sum()

    mean = w @ X
    sd = np.sqrt(w @ (X - mean) ** 2)
    scale = np.maximum(np.abs(mean), 1.0)
    kept = np.flatnonzero(sd > 1e-12 * scale)
    Z = np.column_stack([np.ones(X.shape[0]), (X[:, kept] - mean[kept]) / sd[kept]])
    zq = np.concatenate([[1.0], (query[kept] - mean[kept]) / sd[kept]])

    ybar = float(w @ y)
    if ybar <= 0.0 or ybar >= 1.0:
        prob = float(np.clip(ybar, PROB_CLAMP, 1 - PROB_CLAMP))
        return LogisticFit(prob, np.zeros(Z.shape[1]), kept, 0, True)

    beta = np.zeros(Z.shape[1])
    eye = np.eye(Z.shape[1])
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(Z @ beta)
        grad = Z.T @ (w * (y - mu))
        if np.linalg.norm(grad) < grad_tol:
            converged = True
            it -= 1
            break
        hess = (Z * (w * mu * (1.0 - mu))[:, None]).T @ Z + ridge * eye
        beta = beta + np.linalg.solve(hess, grad)

    mu = expit(Z @ beta)
    # A linear predictor that classifies every row correctly exists only
    # under complete separation, where the MLE runs off to infinity.
    separated = bool(np.all((mu > 0.5) == (y > 0.5)))
    if not converged and not separated:
        grad = Z.T @ (w * (y - mu))
        if np.linalg.norm(grad) >= grad_tol:
            raise LogisticConvergenceError(
                f"IRLS did not reach gradient norm {grad_tol} in {max_iter} iterations", beta
            )
    prob = float(np.clip(expit(zq @ beta), PROB_CLAMP, 1 - PROB_CLAMP))
    return LogisticFit(prob, beta, kept, it, separated)
