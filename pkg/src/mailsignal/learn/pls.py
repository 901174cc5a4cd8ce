"""PLS1 component extraction followed by a logistic link on the scores."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .logistic import LogitFit, fit_logistic, null_loglik


def pls1(X, y, n_components: int):
    """NIPALS PLS1 on centered data.

    Returns ``(W, P, T, R)``: weights, X loadings, training scores and the
    rotation ``R = W (P'W)^-1`` such that ``T = Xc @ R`` for centered input.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if n_components > np.linalg.matrix_rank(X - X.mean(axis=0)):
        raise ValueError("n_components exceeds the rank of X")
    Xa = X - X.mean(axis=0)
    yc = y - y.mean()
    p_dim = X.shape[1]
    W = np.zeros((p_dim, n_components))
    P = np.zeros((p_dim, n_components))
    T = np.zeros((X.shape[0], n_components))
    for a in range(n_components):
        w = Xa.T @ yc
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            # y is exhausted; continue along the dominant remaining direction of X
            w = np.linalg.svd(Xa, full_matrices=False)[2][0]
        else:
            w = w / norm
        t = Xa @ w
        # re-orthogonalize against earlier scores to hold numerical orthogonality
        for b in range(a):
            t -= (T[:, b] @ t) / (T[:, b] @ T[:, b]) * T[:, b]
        p = Xa.T @ t / (t @ t)
        Xa = Xa - np.outer(t, p)
        W[:, a], P[:, a], T[:, a] = w, p, t
    R = W @ np.linalg.pinv(P.T @ W)
    return W, P, T, R


@dataclass
class PlsLogitModel:
    components: int
    x_mean: np.ndarray
    weights: np.ndarray  # features x components
    rotation: np.ndarray
    logit: LogitFit
    period_dummy: bool = False
    feature_names: list[str] = field(default_factory=list)
    pseudo_r2: float = 0.0
    aic: float = 0.0
    n: int = 0

    @property
    def loadings(self) -> np.ndarray:
        return self.weights

    def scores(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.x_mean) @ self.rotation

    def _inputs(self, X, period=None):
        T = self.scores(X)
        if self.period_dummy:
            if period is None:
                raise ValueError("model has a period dummy; pass period")
            T = np.column_stack([T, np.asarray(period, dtype=float)])
        return T

    def predict_proba(self, X, period=None):
        return self.logit.predict_proba(self._inputs(X, period))

    def to_json(self) -> dict:
        return {
            "type": "pls_logit",
            "components": self.components,
            "feature_names": self.feature_names,
            "x_mean": self.x_mean.tolist(),
            "weights": self.weights.tolist(),
            "rotation": self.rotation.tolist(),
            "coef": self.logit.coef.tolist(),
            "ridge": self.logit.ridge,
            "separation_fallback": self.logit.separated,
            "period_dummy": self.period_dummy,
            "pseudo_r2": self.pseudo_r2,
            "aic": self.aic,
            "loglik": self.logit.loglik,
            "n": self.n,
        }


def fit_pls_logit(X, y, n_components: int = 2, period=None,
                  feature_names=()) -> PlsLogitModel:
    """PLS1 components of ``X`` against ``y``, then ML logistic regression on them.

    Passing ``period`` adds a second-period dummy to the logistic stage only.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    W, _, T, R = pls1(X, y, n_components)
    dummy = None
    if period is not None:
        period = np.asarray(period)
        dummy = (period == period.max()).astype(float)
        inputs = np.column_stack([T, dummy])
    else:
        inputs = T
    fit = fit_logistic(inputs, y)
    ll0 = null_loglik(y)
    pseudo = 1.0 - fit.loglik / ll0 if ll0 != 0 else 0.0
    k = inputs.shape[1] + 1
    return PlsLogitModel(n_components, X.mean(axis=0), W, R, fit, dummy is not None,
                         list(feature_names), pseudo, 2 * k - 2 * fit.loglik, len(y))
