"""Discrete AdaBoost with decision stumps or single-feature logistic learners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logistic import fit_logistic

EPS = 1e-10


class DegenerateDataError(ValueError):
    pass


@dataclass
class Stump:
    feature: int
    threshold: float
    polarity: int  # +1: predict +1 above the threshold

    def predict(self, X) -> np.ndarray:
        x = np.asarray(X)[:, self.feature]
        return np.where(x > self.threshold, self.polarity, -self.polarity)

    def to_json(self):
        return {"kind": "stump", "feature": self.feature, "threshold": self.threshold,
                "polarity": self.polarity}


@dataclass
class Logit1:
    feature: int
    intercept: float
    slope: float

    def predict(self, X) -> np.ndarray:
        z = self.intercept + self.slope * np.asarray(X)[:, self.feature]
        return np.where(z > 0, 1, -1)

    def to_json(self):
        return {"kind": "logit1", "feature": self.feature, "intercept": self.intercept,
                "slope": self.slope}


def fit_stump(X, ys, w, order=None) -> tuple[Stump, float]:
    """Weighted-error-minimizing stump. ``ys`` in {-1, +1}; ``w`` sums to 1.

    ``order`` is the per-column argsort of X, which callers may cache.
    """
    n, d = X.shape
    if order is None:
        order = np.argsort(X, axis=0, kind="stable")
    xs = np.take_along_axis(X, order, axis=0)
    wy = (w * ys)[order]
    # Predicting +1 above a cut after position i (polarity +1) errs on
    # positives at or below the cut and negatives above it.
    pos_below = np.cumsum(np.where(wy > 0, wy, 0.0), axis=0)
    neg_below = np.cumsum(np.where(wy < 0, -wy, 0.0), axis=0)
    pos_total, neg_total = pos_below[-1], neg_below[-1]
    err_plus = pos_below + (neg_total - neg_below)
    err_minus = 1.0 - err_plus
    # only cut between distinct values; the last row means "everything below"
    valid = np.ones_like(xs, dtype=bool)
    valid[:-1] = xs[1:] > xs[:-1]
    err_plus = np.where(valid, err_plus, np.inf)
    err_minus = np.where(valid, err_minus, np.inf)
    # cutting before the first row: everything above
    e_all_plus = neg_total  # predict +1 everywhere
    best = (np.inf, 0, 0.0, 1)
    for j in range(d):
        i_p = int(np.argmin(err_plus[:, j]))
        i_m = int(np.argmin(err_minus[:, j]))
        cands = [
            (err_plus[i_p, j], j, i_p, 1),
            (err_minus[i_m, j], j, i_m, -1),
            (e_all_plus[j], j, -1, 1),
            (pos_total[j], j, -1, -1),
        ]
        for c in cands:
            if c[0] < best[0] - 1e-15:
                best = c
    err, j, i, pol = best
    if i < 0:
        thr = xs[0, j] - 1.0
    elif i == n - 1:
        thr = xs[-1, j]
    else:
        thr = 0.5 * (xs[i, j] + xs[i + 1, j])
    return Stump(int(j), float(thr), int(pol)), float(max(err, 0.0))


def fit_logit1(X, ys, w) -> tuple[Logit1, float]:
    """Best single-feature weighted logistic learner by weighted training error."""
    y01 = (ys > 0).astype(float)
    scale = len(ys)
    best = None
    for j in range(X.shape[1]):
        fit = fit_logistic(X[:, j], y01, weights=w * scale)
        learner = Logit1(j, float(fit.coef[0]), float(fit.coef[1]))
        err = float(w @ (learner.predict(X) != ys))
        if best is None or err < best[1] - 1e-15:
            best = (learner, err)
    return best


@dataclass
class AdaBoostModel:
    learners: list = field(default_factory=list)
    alphas: list[float] = field(default_factory=list)
    errors: list[float] = field(default_factory=list)
    weak: str = "stump"
    feature_names: list[str] = field(default_factory=list)
    stopped: str = "rounds"

    @property
    def rounds(self) -> int:
        return len(self.learners)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        f = np.zeros(X.shape[0])
        for a, h in zip(self.alphas, self.learners):
            f += a * h.predict(X)
        return f

    def predict_proba(self, X) -> np.ndarray:
        # logistic calibration of the additive score, P = 1 / (1 + exp(-2F))
        return 0.5 * (1.0 + np.tanh(self.decision_function(X)))

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) > 0).astype(int)

    def training_error_bound(self) -> float:
        return math.prod(2.0 * math.sqrt(e * (1.0 - e)) for e in self.errors)

    def to_json(self) -> dict:
        return {
            "type": "adaboost",
            "weak": self.weak,
            "rounds": self.rounds,
            "alphas": self.alphas,
            "errors": self.errors,
            "learners": [h.to_json() for h in self.learners],
            "feature_names": self.feature_names,
            "stopped": self.stopped,
        }


def fit_adaboost(X, y, rounds: int = 50, weak: str = "stump",
                 feature_names=(), trace=None) -> AdaBoostModel:
    """Discrete AdaBoost on labels ``y`` in {0, 1}.

    Stops early when a learner's weighted error reaches 0.5, or after a
    perfect learner (its error is floored at 1e-10 so its weight stays finite).
    ``trace``, if given, receives the training error after every round.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("AdaBoost needs both classes")
    if weak not in ("stump", "logit1"):
        raise ValueError(f"unknown weak learner {weak!r}")
    ys = np.where(y > 0, 1, -1)
    n = len(ys)
    w = np.full(n, 1.0 / n)
    order = np.argsort(X, axis=0, kind="stable") if weak == "stump" else None
    model = AdaBoostModel(weak=weak, feature_names=list(feature_names))
    F = np.zeros(n)
    for m in range(rounds):
        h, err = fit_stump(X, ys, w, order) if weak == "stump" else fit_logit1(X, ys, w)
        if err >= 0.5:
            if m == 0:
                raise DegenerateDataError("first weak learner is no better than chance")
            model.stopped = "weak learner error >= 0.5"
            break
        err = max(err, EPS)
        alpha = 0.5 * math.log((1.0 - err) / err)
        pred = h.predict(X)
        model.learners.append(h)
        model.alphas.append(alpha)
        model.errors.append(err)
        F += alpha * pred
        if trace is not None:
            trace.append(float(np.mean(np.sign(F) != ys)))
        if err <= EPS:
            model.stopped = "perfect weak learner"
            break
        w = w * np.exp(-alpha * ys * pred)
        w /= w.sum()
    return model
