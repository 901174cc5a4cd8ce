"""Panel design matrix: join indicator rows, impute, flag missingness, standardize."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

INDICATORS = [
    "betweenness", "closeness", "degree", "bet_osc", "messages_sent",
    "contribution_index", "influence", "sentiment", "complexity", "emotionality",
    "ego_nudges", "alter_nudges", "ego_art_hours", "alter_art_hours",
]
CONTROLS = ["age", "band", "tenure", "tslp"]


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    period: np.ndarray
    names: list[str]
    mask: np.ndarray  # True where the raw value was missing (before imputation)
    keys: list[tuple[str, int]] = field(default_factory=list)
    means: np.ndarray | None = None
    sds: np.ndarray | None = None
    dropped: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def destandardize(self, X=None) -> np.ndarray:
        X = self.X if X is None else X
        return X * self.sds + self.means

    def subset(self, rows) -> "DesignMatrix":
        rows = np.asarray(rows)
        return DesignMatrix(self.X[rows], self.y[rows], self.period[rows], self.names,
                            self.mask[rows], [self.keys[i] for i in np.arange(self.n)[rows]]
                            if self.keys else [], self.means, self.sds, self.dropped)

    def columns(self, names: Sequence[str]) -> np.ndarray:
        idx = [self.names.index(n) for n in names]
        return self.X[:, idx]


def default_features(rows: Sequence[dict]) -> list[str]:
    """Indicators, controls and whichever topic share columns the rows carry."""
    topic_cols = sorted((c for c in (rows[0] if rows else {}) if c.startswith("topic_") and c != "topic_missing"),
                        key=lambda c: int(c.split("_")[1]))
    return INDICATORS + CONTROLS + topic_cols


def _float(v):
    if v is None or v == "":
        return np.nan
    return float(v)


def read_rows(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def assemble(rows: Iterable[dict], features: Sequence[str], label: str = "label",
             interactions: bool = False, mask_features: bool = True) -> DesignMatrix:
    """Build a standardized design matrix from indicator rows.

    Rows need ``actor``, ``period`` and ``label`` keys; rows with an empty label
    are excluded. Features that are entirely missing or constant are dropped.
    Each feature is z-scored over its observed entries, then missing entries
    are set to the standardized median and recorded in ``mask``. With
    ``mask_features`` a 0/1 ``<name>_missing`` column is appended for every
    feature with gaps, and with ``interactions`` each feature also gets a
    ``<name>:p2`` copy multiplied by the second-period dummy.
    """
    rows = [r for r in rows if str(r.get(label, "")).strip() not in ("", "nan", "None")]
    if not rows:
        raise ValueError("no labelled rows")
    keys = [(r["actor"], int(r["period"])) for r in rows]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate (actor, period) rows")
    y = np.array([int(float(r[label])) for r in rows], dtype=float)
    periods = np.array([int(r["period"]) for r in rows])
    raw = np.array([[_float(r.get(f)) for f in features] for r in rows], dtype=float).reshape(len(rows), len(features))

    names, cols, masks, means, sds, dropped = [], [], [], [], [], []
    extra_names, extra_cols = [], []
    for j, f in enumerate(features):
        col = raw[:, j]
        miss = np.isnan(col)
        if miss.all():
            log.warning("feature %s entirely missing; dropped", f)
            dropped.append(f)
            continue
        obs = col[~miss]
        mu, sd = obs.mean(), obs.std()
        if not sd > 1e-12 * max(1.0, abs(mu)):
            log.warning("feature %s has zero variance; dropped", f)
            dropped.append(f)
            continue
        z = (col - mu) / sd
        z[miss] = (np.median(obs) - mu) / sd
        names.append(f)
        cols.append(z)
        masks.append(miss)
        means.append(mu)
        sds.append(sd)
        if mask_features and miss.any():
            ind = miss.astype(float)
            m, s = ind.mean(), ind.std()
            extra_names.append(f + "_missing")
            extra_cols.append((ind, m, s))

    for name, (ind, m, s) in zip(extra_names, extra_cols):
        names.append(name)
        cols.append((ind - m) / s)
        masks.append(np.zeros(len(rows), dtype=bool))
        means.append(m)
        sds.append(s)

    if interactions:
        p2 = (periods == periods.max()).astype(float)
        for name, col, mu, sd in list(zip(names, cols, means, sds)):
            inter = col * p2
            m, s = inter.mean(), inter.std()
            if s > 0:
                names.append(name + ":p2")
                cols.append((inter - m) / s)
                masks.append(np.zeros(len(rows), dtype=bool))
                means.append(m)
                sds.append(s)

    X = np.column_stack(cols) if cols else np.empty((len(rows), 0))
    return DesignMatrix(X, y, periods, names, np.column_stack(masks) if masks else
                        np.zeros((len(rows), 0), dtype=bool), keys,
                        np.array(means), np.array(sds), dropped)
