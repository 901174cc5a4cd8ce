"""Top-performer profiling: k-means with elbow sweep, diagonal GMM, agreement, PCA."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .learn.evaluate import cohen_kappa

VAR_FLOOR = 1e-6


def top_performer_matrix(rows: Sequence[dict], features: Sequence[str]):
    """Standardized feature matrix over label-positive rows.

    Missing cells take the column median; features that are entirely missing or
    constant among these rows are dropped. Returns ``(Z, kept_features, rows)``.
    """
    rows = [r for r in rows if r.get("label") not in (None, "") and int(float(r["label"])) == 1]
    feats = [f for f in features if any(r.get(f) not in ("", None) for r in rows)]
    X = np.array([[np.nan if r.get(f) in ("", None) else float(r[f]) for f in feats] for r in rows],
                 dtype=float).reshape(len(rows), len(feats))
    if len(rows):
        X = np.where(np.isnan(X), np.nanmedian(X, axis=0), X)
    keep = X.std(axis=0) > 0 if len(rows) else np.zeros(len(feats), dtype=bool)
    X = X[:, keep]
    feats = [f for f, k in zip(feats, keep) if k]
    Z = (X - X.mean(axis=0)) / X.std(axis=0) if len(rows) else X
    return Z, feats, rows


@dataclass
class ClusterResult:
    k: int
    assignments: np.ndarray
    centers: np.ndarray
    inertia: float
    inertia_trace: list[float] = field(default_factory=list)
    reseeded: int = 0


def _inertia(X, centers, labels) -> float:
    return float(((X - centers[labels]) ** 2).sum())


def _kmeanspp(X, k, rng) -> np.ndarray:
    n = X.shape[0]
    centers = [X[rng.integers(n)]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers, dtype=float)


def _lloyd(X, centers, max_iter=300) -> ClusterResult:
    k = centers.shape[0]
    labels = None
    trace = []
    reseeded = 0
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        trace.append(_inertia(X, centers, labels))
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
            else:
                # empty cluster: move the center to the point farthest from its own center
                far = int(((X - centers[labels]) ** 2).sum(axis=1).argmax())
                centers[c] = X[far]
                labels[far] = c
                reseeded += 1
        trace.append(_inertia(X, centers, labels))
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    return ClusterResult(k, labels, centers, _inertia(X, centers, labels), trace, reseeded)


def kmeans(X, k: int, restarts: int = 10, seed: int = 0) -> ClusterResult:
    """Lloyd's algorithm from k-means++ seeds; best restart by inertia."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < k:
        raise ValueError("fewer rows than clusters")
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        res = _lloyd(X, _kmeanspp(X, k, rng))
        if best is None or res.inertia < best.inertia - 1e-12:
            best = res
    return best


@dataclass
class ElbowResult:
    table: list[tuple[int, float]]
    suggested_k: int
    low_confidence: bool


def elbow_sweep(X, ks: Sequence[int] = range(1, 9), restarts: int = 10, seed: int = 0) -> ElbowResult:
    """Inertia per k and the k with the largest second difference.

    Each k also gets a warm start from the k-1 centers plus the farthest point,
    which keeps the tabulated inertia non-increasing in k.
    The suggestion is flagged low-confidence when the winning second difference
    is under 10% of the available inertia drop, i.e. the one-cluster inertia
    (the drop from a single cluster down to a perfect fit).
    """
    X = np.asarray(X, dtype=float)
    ks = sorted(k for k in ks if k <= X.shape[0])
    table = []
    prev = None
    for k in ks:
        res = kmeans(X, k, restarts, seed)
        if prev is not None and prev.k < k:
            centers = prev.centers.copy()
            while centers.shape[0] < k:
                d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2).min(axis=1)
                centers = np.vstack([centers, X[int(d2.argmax())]])
            warm = _lloyd(X, centers)
            if warm.inertia < res.inertia:
                res = warm
        table.append((k, res.inertia))
        prev = res
    if len(table) < 3:
        return ElbowResult(table, table[0][0], True)
    inertias = [i for _, i in table]
    second = [inertias[i - 1] - 2 * inertias[i] + inertias[i + 1] for i in range(1, len(inertias) - 1)]
    best = int(np.argmax(second))
    drop = inertias[0] if table[0][0] == 1 else kmeans(X, 1).inertia
    low = drop <= 0 or second[best] < 0.1 * drop
    return ElbowResult(table, table[best + 1][0], bool(low))


@dataclass
class GmmResult:
    k: int
    means: np.ndarray
    variances: np.ndarray
    weights: np.ndarray
    responsibilities: np.ndarray
    loglik_trace: list[float]
    floored: bool = False

    @property
    def assignments(self) -> np.ndarray:
        return self.responsibilities.argmax(axis=1)


def _log_densities(X, means, variances, weights):
    diff = X[:, None, :] - means[None, :, :]
    log_det = np.log(variances).sum(axis=1)
    d = X.shape[1]
    quad = (diff ** 2 / variances[None, :, :]).sum(axis=2)
    return np.log(weights)[None, :] - 0.5 * (d * math.log(2 * math.pi) + log_det[None, :] + quad)


def gmm_em(X, k: int, seed: int = 0, tol: float = 1e-8, max_iter: int = 500) -> GmmResult:
    """Diagonal-covariance Gaussian mixture fitted by EM from a k-means start."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if n < 2 * k:
        raise ValueError("need at least 2k rows")
    init = kmeans(X, k, restarts=10, seed=seed)
    resp = np.zeros((n, k))
    resp[np.arange(n), init.assignments] = 1.0
    trace: list[float] = []
    floored = False
    means = variances = weights = None
    for _ in range(max_iter):
        # M step
        nk = resp.sum(axis=0) + 1e-300
        weights = nk / n
        means = (resp.T @ X) / nk[:, None]
        variances = (resp.T @ X ** 2) / nk[:, None] - means ** 2
        if (variances < VAR_FLOOR).any():
            floored = True
            variances = np.maximum(variances, VAR_FLOOR)
        # E step
        logp = _log_densities(X, means, variances, weights)
        ll_rows = logsumexp(logp, axis=1)
        ll = float(ll_rows.sum())
        resp = np.exp(logp - ll_rows[:, None])
        if trace and ll - trace[-1] < tol:
            trace.append(ll)
            break
        trace.append(ll)
    return GmmResult(k, means, variances, weights, resp, trace, floored)


def align_labels(a, b) -> np.ndarray:
    """Relabel ``b`` by the bijection onto ``a``'s labels maximizing agreement.

    Exhaustive for up to six labels, with ties broken by the larger kappa so
    the result does not depend on how either input names its clusters;
    Hungarian assignment beyond that. When the label sets differ in size the
    bijection runs over their union.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    la, lb = np.unique(a), np.unique(b)
    if len(la) != len(lb):
        la = lb = np.union1d(a, b)
    k = len(la)
    pa = {l: i for i, l in enumerate(la)}
    pb = {l: i for i, l in enumerate(lb)}
    conf = np.zeros((k, k), dtype=int)  # rows: a labels, columns: b labels
    for x, y in zip(a, b):
        conf[pa[x], pb[y]] += 1
    if k <= 6:
        rows, cols = conf.sum(axis=1), conf.sum(axis=0)
        best, best_perm = None, None
        for perm in itertools.permutations(range(k)):
            agree = sum(conf[perm[j], j] for j in range(k))
            chance = sum(int(cols[j]) * int(rows[perm[j]]) for j in range(k))
            key = (agree, -chance)
            if best is None or key > best:
                best, best_perm = key, perm
        mapping = {lb[j]: la[best_perm[j]] for j in range(k)}
    else:
        r, c = linear_sum_assignment(-conf)
        mapping = {lb[j]: la[i] for i, j in zip(r, c)}
    return np.array([mapping[v] for v in b])


def clustering_kappa(a, b) -> float:
    """Cohen's kappa between two clusterings after optimal label alignment."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError("clusterings cover different rows")
    if len(np.unique(a)) != len(np.unique(b)):
        raise ValueError("clusterings have different numbers of clusters")
    return cohen_kappa(align_labels(a, b), a)


def purity(assignments, truth) -> float:
    assignments = np.asarray(assignments)
    truth = np.asarray(truth)
    total = 0
    for c in np.unique(assignments):
        _, counts = np.unique(truth[assignments == c], return_counts=True)
        total += counts.max()
    return total / len(truth)


@dataclass
class PcaProjection:
    components: np.ndarray  # dims x features, orthonormal rows
    explained_variance: np.ndarray  # all eigenvalues, descending
    explained_ratio: np.ndarray  # first ``dims`` ratios
    coordinates: np.ndarray
    mean: np.ndarray
    scale: np.ndarray


def pca_project(X, dims: int = 2, standardize: bool = True) -> PcaProjection:
    """Eigen-decomposition of the (standardized) covariance matrix.

    Each component is signed so that its largest-magnitude loading is positive.
    """
    X = np.asarray(X, dtype=float)
    if X.shape[0] <= dims:
        raise ValueError("need more rows than dims")
    mean = X.mean(axis=0)
    scale = X.std(axis=0, ddof=1) if standardize else np.ones(X.shape[1])
    scale = np.where(scale > 0, scale, 1.0)
    Z = (X - mean) / scale
    cov = Z.T @ Z / (X.shape[0] - 1)
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order].T
    for i, v in enumerate(vecs):
        if v[np.argmax(np.abs(v))] < 0:
            vecs[i] = -v
    total = vals.sum()
    ratios = vals / total if total > 0 else np.zeros_like(vals)
    comps = vecs[:dims]
    return PcaProjection(comps, vals, ratios[:dims], Z @ comps.T, mean, scale)


def profile_table(X, assignments, feature_names: Sequence[str]) -> list[dict]:
    """Per-cluster mean of standardized features, in sd units from the sample mean."""
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0)
    Z = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    assignments = np.asarray(assignments)
    table = []
    for c in np.unique(assignments):
        center = Z[assignments == c].mean(axis=0)
        row = {"cluster": int(c), "size": int((assignments == c).sum())}
        row.update({f: float(v) for f, v in zip(feature_names, center)})
        table.append(row)
    return table


def write_table(rows: list[dict], path, columns: Sequence[str] | None = None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else v
