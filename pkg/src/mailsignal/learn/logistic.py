"""Maximum-likelihood logistic regression by damped Newton iterations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RIDGE_FALLBACK = 1e-4


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def log_likelihood(beta, X, y, weights=None, ridge: float = 0.0) -> float:
    """Weighted Bernoulli log-likelihood; ``X`` must already carry the intercept column.

    The ridge penalty skips column 0 (the intercept).
    """
    z = X @ beta
    ll_i = y * z - np.logaddexp(0.0, z)
    ll = float(ll_i.sum() if weights is None else weights @ ll_i)
    return ll - 0.5 * ridge * float(beta[1:] @ beta[1:])


def gradient(beta, X, y, weights=None, ridge: float = 0.0):
    r = y - sigmoid(X @ beta)
    if weights is not None:
        r = r * weights
    g = X.T @ r
    g[1:] -= ridge * beta[1:]
    return g


def hessian(beta, X, weights=None, ridge: float = 0.0):
    p = sigmoid(X @ beta)
    v = p * (1.0 - p)
    if weights is not None:
        v = v * weights
    H = -(X.T * v) @ X
    idx = np.arange(1, H.shape[0])
    H[idx, idx] -= ridge
    return H


@dataclass
class LogitFit:
    coef: np.ndarray  # intercept first
    loglik: float
    converged: bool
    ridge: float
    iterations: int

    @property
    def separated(self) -> bool:
        return self.ridge > 0

    def decision(self, X):
        return self.coef[0] + np.asarray(X, dtype=float) @ self.coef[1:]

    def predict_proba(self, X):
        return sigmoid(self.decision(X))


def _newton(X1, y, weights, ridge, max_iter, tol):
    beta = np.zeros(X1.shape[1])
    ll = log_likelihood(beta, X1, y, weights, ridge)
    for it in range(1, max_iter + 1):
        g = gradient(beta, X1, y, weights, ridge)
        H = hessian(beta, X1, weights, ridge)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        t = 1.0
        while True:
            cand = beta + t * step
            ll_new = log_likelihood(cand, X1, y, weights, ridge)
            if ll_new >= ll - 1e-12 or t < 1e-10:
                break
            t *= 0.5
        gain = ll_new - ll
        beta, ll = cand, ll_new
        if abs(gain) < tol * (1.0 + abs(ll)) and np.max(np.abs(g)) < 1e-6 * max(1.0, len(y)) ** 0.5:
            return beta, ll, True, it
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > 1e6:
            return beta, ll, False, it
    return beta, ll, False, max_iter


def _splits_perfectly(z, y, weights) -> bool:
    """True when the fitted hyperplane classifies every weighted row strictly.

    Such data are linearly separable, so no finite maximum-likelihood fit exists.
    """
    live = np.ones(len(y), dtype=bool) if weights is None else np.asarray(weights) > 0
    pos, neg = live & (y > 0.5), live & (y <= 0.5)
    if not pos.any() or not neg.any():
        return False
    return bool(np.all(z[pos] > 0) and np.all(z[neg] < 0))


def fit_logistic(X, y, weights=None, ridge: float = 0.0, max_iter: int = 100,
                 tol: float = 1e-12) -> LogitFit:
    """Fit ``P(y=1|x) = sigmoid(b0 + x.b)``.

    An unpenalized fit that fails to converge or runs off towards infinity
    (quasi-complete separation) is redone with a small ridge penalty, and the
    returned fit reports the penalty it used.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float)
    X1 = np.column_stack([np.ones(len(y)), X])
    beta, ll, ok, it = _newton(X1, y, weights, ridge, max_iter, tol)
    separated = ridge == 0.0 and (not ok or np.max(np.abs(beta[1:]), initial=0.0) > 30.0
                                  or _splits_perfectly(X1 @ beta, y, weights))
    if separated:
        ridge = RIDGE_FALLBACK
        beta, ll, ok, it = _newton(X1, y, weights, ridge, max_iter, tol)
    unpenalized = log_likelihood(beta, X1, y, weights)
    return LogitFit(beta, unpenalized, ok, ridge, it)


def null_loglik(y, weights=None) -> float:
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    p = float(w @ y / w.sum())
    if p in (0.0, 1.0):
        return 0.0
    return float(w @ (y * np.log(p) + (1 - y) * np.log(1 - p)))
