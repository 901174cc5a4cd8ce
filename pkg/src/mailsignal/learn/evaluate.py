"""Classifier evaluation: confusion metrics, Kappa, ROC/AUC, LOOCV, period LR test."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .boost import fit_adaboost
from .design import DesignMatrix
from .logistic import fit_logistic
from .pls import fit_pls_logit, pls1


def cohen_kappa(pred, true) -> float:
    pred = np.asarray(pred)
    true = np.asarray(true)
    if pred.shape != true.shape:
        raise ValueError("label vectors differ in length")
    n = len(true)
    labels = np.union1d(pred, true)
    p_o = float(np.mean(pred == true))
    p_e = float(sum(np.sum(pred == c) * np.sum(true == c) for c in labels)) / (n * n)
    if p_e == 1.0:
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


def roc_curve(scores, labels):
    """ROC points at descending score thresholds, tied scores grouped.

    Returns ``(thresholds, fpr, tpr)``; the first point is ``(0, 0)`` at +inf.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    P, N = labels.sum(), (~labels).sum()
    order = np.argsort(-scores, kind="stable")
    s, lab = scores[order], labels[order]
    cut = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tp = np.cumsum(lab)[cut]
    fp = np.cumsum(~lab)[cut]
    thresholds = np.r_[np.inf, s[cut]]
    tpr = np.r_[0.0, tp / P if P else np.zeros_like(tp, dtype=float)]
    fpr = np.r_[0.0, fp / N if N else np.zeros_like(fp, dtype=float)]
    return thresholds, fpr, tpr


def auc(fpr, tpr) -> float:
    return float(np.trapezoid(tpr, fpr))


@dataclass
class EvalReport:
    accuracy: float
    kappa: float
    sensitivity: float
    specificity: float
    auc: float
    roc: list[tuple[float, float]] = field(default_factory=list)
    thresholds: list[float] = field(default_factory=list)
    threshold: float = 0.5
    n: int = 0
    skipped_folds: int = 0
    scores: list[float] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["thresholds"] = [t if math.isfinite(t) else "inf" for t in self.thresholds]
        return d

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)

    def write_roc(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["threshold", "fpr", "tpr"])
            for t, (f, r) in zip(self.thresholds, self.roc):
                w.writerow(["inf" if not math.isfinite(t) else repr(t), repr(f), repr(r)])


def evaluate_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pred = (scores >= threshold).astype(int)
    pos, neg = labels == 1, labels == 0
    thr, fpr, tpr = roc_curve(scores, labels)
    return EvalReport(
        accuracy=float(np.mean(pred == labels)),
        kappa=cohen_kappa(pred, labels),
        sensitivity=float(np.mean(pred[pos] == 1)) if pos.any() else float("nan"),
        specificity=float(np.mean(pred[neg] == 0)) if neg.any() else float("nan"),
        auc=auc(fpr, tpr),
        roc=list(zip(fpr.tolist(), tpr.tolist())),
        thresholds=thr.tolist(),
        threshold=threshold,
        n=len(labels),
        scores=scores.tolist(),
        labels=labels.tolist(),
    )


def fit_model(design: DesignMatrix, spec: dict, rows=None):
    """Fit the model described by ``spec`` and return a scoring function."""
    X, y, period = design.X, design.y, design.period
    if rows is not None:
        X, y, period = X[rows], y[rows], period[rows]
    kind = spec.get("model", "adaboost")
    if kind == "adaboost":
        model = fit_adaboost(X, y, spec.get("rounds", 50), spec.get("weak", "stump"),
                             design.names)
        return model, lambda Xn, pn: model.predict_proba(Xn)
    if kind == "pls_logit":
        use_period = spec.get("period_dummy", False)
        model = fit_pls_logit(X, y, spec.get("components", 2),
                              period if use_period else None, design.names)
        return model, lambda Xn, pn: model.predict_proba(Xn, (pn == design.period.max()).astype(float) if use_period else None)
    raise ValueError(f"unknown model {kind!r}")


def evaluate_loocv(design: DesignMatrix, spec: dict, threshold: float = 0.5) -> EvalReport:
    """Leave-one-out: refit per held-out row, pool held-out scores, then score."""
    n = design.n
    if n < 10:
        raise ValueError("LOOCV needs at least 10 rows")
    scores, labels, skipped = [], [], 0
    everything = np.arange(n)
    for i in range(n):
        train = everything != i
        if len(np.unique(design.y[train])) < 2:
            skipped += 1
            continue
        _, score = fit_model(design, spec, train)
        scores.append(float(score(design.X[i:i + 1], design.period[i:i + 1])[0]))
        labels.append(int(design.y[i]))
    report = evaluate_scores(scores, labels, threshold)
    report.skipped_folds = skipped
    return report


@dataclass
class PeriodTest:
    statistic: float | None
    p_value: float | None
    diagnostic: str = ""


def likelihood_ratio_period_test(design: DesignMatrix, spec: dict | None = None) -> PeriodTest:
    """LR test of a second-period dummy on top of the PLS component scores.

    Components are extracted once and shared by both nested logistic fits.
    """
    spec = spec or {}
    periods = np.unique(design.period)
    if len(periods) < 2:
        raise ValueError("period test needs two periods")
    comps = min(spec.get("components", 2), np.linalg.matrix_rank(design.X))
    _, _, T, _ = pls1(design.X, design.y, comps)
    dummy = (design.period == periods.max()).astype(float)
    without = fit_logistic(T, design.y)
    with_d = fit_logistic(np.column_stack([T, dummy]), design.y)
    if not (without.converged and with_d.converged) or with_d.separated or without.separated:
        return PeriodTest(None, None, "logistic fit did not converge")
    stat = max(0.0, 2.0 * (with_d.loglik - without.loglik))
    return PeriodTest(stat, float(stats.chi2.sf(stat, 1)))
