"""Per-actor topic-share features from LDA over top-k TF-IDF terms."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .content import CorpusStats


@dataclass(frozen=True)
class ActorDocument:
    actor: str
    period: int
    terms: tuple[str, ...]
    weights: tuple[float, ...] = ()


def top_words(actor: str, period: int, emails: Sequence[Sequence[str]],
              stats: CorpusStats, k: int = 10) -> ActorDocument | None:
    """Top ``k`` terms by TF-IDF weight summed over the actor's emails.

    Ties are broken lexicographically. Returns None when there are no tokens.
    """
    totals: Counter[str] = Counter()
    for tokens in emails:
        for term, tf in Counter(tokens).items():
            totals[term] += tf * stats.idf(term)
    if not totals:
        return None
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return ActorDocument(actor, period, tuple(t for t, _ in ranked), tuple(w for _, w in ranked))


@dataclass
class TopicModel:
    K: int
    vocab: list[str]
    phi: np.ndarray  # K x V, P(w | topic)
    theta: np.ndarray  # D x K, P(topic | doc)
    alpha: float
    beta: float
    iterations: int
    seed: int
    keys: list[tuple[str, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "type": "lda",
            "K": self.K,
            "alpha": self.alpha,
            "beta": self.beta,
            "iterations": self.iterations,
            "seed": self.seed,
            "vocab": self.vocab,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "documents": [list(k) for k in self.keys],
        }

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)


@njit(cache=True)
def _gibbs(words, docs, z, ndk, nkw, nk, alpha, beta, uniforms):
    n_tokens = words.shape[0]
    K = nk.shape[0]
    V = nkw.shape[1]
    probs = np.empty(K)
    for it in range(uniforms.shape[0]):
        for i in range(n_tokens):
            w = words[i]
            d = docs[i]
            k = z[i]
            ndk[d, k] -= 1
            nkw[k, w] -= 1
            nk[k] -= 1
            total = 0.0
            for t in range(K):
                total += (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + V * beta)
                probs[t] = total
            u = uniforms[it, i] * total
            k = 0
            while k < K - 1 and probs[k] < u:
                k += 1
            z[i] = k
            ndk[d, k] += 1
            nkw[k, w] += 1
            nk[k] += 1


def fit_lda(documents: Sequence[Sequence[str]], K: int = 6, alpha: float | None = None,
            beta: float = 0.01, iterations: int = 1000, seed: int = 0,
            keys: Sequence[tuple[str, int]] = ()) -> TopicModel:
    """Collapsed Gibbs sampling LDA; each distinct term counts once per document.

    ``alpha`` defaults to ``50 / K``.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    docs = [list(dict.fromkeys(d)) for d in documents]
    if not docs or not any(docs):
        raise ValueError("empty corpus")
    if alpha is None:
        alpha = 50.0 / K
    vocab = sorted({t for d in docs for t in d})
    index = {t: i for i, t in enumerate(vocab)}
    words = np.array([index[t] for d in docs for t in d], dtype=np.int64)
    doc_ids = np.array([i for i, d in enumerate(docs) for _ in d], dtype=np.int64)

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=words.shape[0]).astype(np.int64)
    ndk = np.zeros((len(docs), K), dtype=np.int64)
    nkw = np.zeros((K, len(vocab)), dtype=np.int64)
    np.add.at(ndk, (doc_ids, z), 1)
    np.add.at(nkw, (z, words), 1)
    nk = nkw.sum(axis=1)
    done = 0
    while done < iterations:
        block = min(100, iterations - done)
        uniforms = rng.random((block, words.shape[0]))
        _gibbs(words, doc_ids, z, ndk, nkw, nk, float(alpha), float(beta), uniforms)
        done += block

    theta = (ndk + alpha) / (ndk.sum(axis=1, keepdims=True) + K * alpha)
    phi = (nkw + beta) / (nk[:, None] + len(vocab) * beta)
    return TopicModel(K, vocab, phi, theta, float(alpha), float(beta), iterations, seed,
                      [tuple(k) for k in keys])


def topic_features(model: TopicModel, keys: Sequence[tuple[str, int]]) -> dict[tuple[str, int], tuple[list[float], bool]]:
    """Topic shares per (actor, period), with a missing flag.

    Keys the model was not fitted on get uniform shares and ``missing=True``.
    """
    fitted = {tuple(k): i for i, k in enumerate(model.keys)}
    out = {}
    for key in keys:
        key = tuple(key)
        if key in fitted:
            out[key] = (model.theta[fitted[key]].tolist(), False)
        else:
            out[key] = ([1.0 / model.K] * model.K, True)
    return out
