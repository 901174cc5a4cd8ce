"""Content indicators computed from tokenized email bodies.

Sentiment and emotionality come from a pluggable term-valence lexicon.
Complexity and influence share one TF-IDF weighting: raw term count times
``ln(1 / p(w))`` where ``p(w)`` is the fraction of emails containing ``w``.
"""

from __future__ import annotations

import csv
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

DAY = 86400.0
INFLUENCE_WINDOW = 4 * DAY

_SPLIT = re.compile(r"[\W_]+", re.UNICODE)

# Small function-word list; override with a stopword file for real corpora.
DEFAULT_STOPWORDS = frozenset(
    """
    an and are as at be but by for from had has have he her his if in into is
    it its me my no not of on or our she so than that the their them then there
    these they this to too us was we were what when which who will with you your
    """.split()
)


class LexiconError(ValueError):
    pass


def tokenize(text: str, stopwords: Iterable[str] | None = None) -> list[str]:
    """Lowercase, split on non-alphanumerics, drop short tokens and stopwords."""
    stop = DEFAULT_STOPWORDS if stopwords is None else frozenset(stopwords)
    return [t for t in _SPLIT.split(text.lower()) if len(t) >= 2 and t not in stop]


def load_stopwords(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip().lower() for line in fh if line.strip())


def load_lexicon(path=None) -> dict[str, float]:
    """Read a ``term,valence`` CSV. Without a path, the bundled lexicon is used."""
    if path is None:
        ref = resources.files("mailsignal.data").joinpath("lexicon.csv")
        text = ref.read_text(encoding="utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lexicon: dict[str, float] = {}
    for row in csv.DictReader(text.splitlines()):
        valence = float(row["valence"])
        if not -1.0 <= valence <= 1.0:
            raise LexiconError(f"valence out of [-1, 1] for {row['term']!r}")
        lexicon[row["term"].strip().lower()] = valence
    if not lexicon:
        raise LexiconError("lexicon is empty")
    return lexicon


def sentiment_score(tokens: Sequence[str], lexicon: Mapping[str, float]) -> float:
    """Mean valence of matched tokens mapped onto [0, 1]; 0.5 when nothing matches."""
    if not lexicon:
        raise LexiconError("lexicon is empty")
    matched = [lexicon[t] for t in tokens if t in lexicon]
    if not matched:
        return 0.5
    return 0.5 + (sum(matched) / len(matched)) / 2.0


def actor_sentiment_emotionality(scores: Sequence[float]) -> tuple[float, float]:
    """Mean per-email score and mean absolute deviation from neutral."""
    if not scores:
        raise ValueError("need at least one scored email")
    n = len(scores)
    return sum(scores) / n, sum(abs(s - 0.5) for s in scores) / n


@dataclass(frozen=True)
class CorpusStats:
    doc_count: int
    doc_freq: Mapping[str, int] = field(default_factory=dict)

    @classmethod
    def from_documents(cls, documents: Iterable[Sequence[str]]) -> "CorpusStats":
        df: Counter[str] = Counter()
        n = 0
        for doc in documents:
            if not doc:
                continue
            n += 1
            df.update(set(doc))
        return cls(n, dict(df))

    @property
    def vocabulary(self) -> frozenset[str]:
        return frozenset(self.doc_freq)

    def p(self, term: str) -> float:
        return self.doc_freq[term] / self.doc_count

    def idf(self, term: str) -> float:
        df = self.doc_freq.get(term)
        if not df:
            return 0.0
        return math.log(self.doc_count / df)


def complexity_index(tokens: Sequence[str], stats: CorpusStats) -> float | None:
    """Average information content ``(1/n) sum q(w) ln(1/p(w))`` of one email.

    Returns None for an empty email. Every token must be registered in ``stats``.
    """
    n = len(tokens)
    if n == 0:
        return None
    total = 0.0
    for term, q in Counter(tokens).items():
        if term not in stats.doc_freq:
            raise KeyError(f"term {term!r} missing from corpus statistics")
        total += q * stats.idf(term)
    return total / n


TfIdfVector = dict  # term -> positive weight


def tfidf_vector(tokens: Iterable[str], stats: CorpusStats) -> TfIdfVector:
    vec = {}
    for term, tf in Counter(tokens).items():
        w = tf * stats.idf(term)
        if w > 0.0:
            vec[term] = w
    return vec


def cosine(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = sum(w * b[t] for t, w in a.items() if t in b)
    if dot == 0.0:
        return 0.0
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    return min(1.0, dot / (na * nb))


def influence_index(sent_tokens: Sequence[str], followup_tokens: Sequence[Sequence[str]],
                    stats: CorpusStats) -> float:
    """Cosine between a sent email and the receiver's concatenated followups."""
    merged = [t for doc in followup_tokens for t in doc]
    return cosine(tfidf_vector(sent_tokens, stats), tfidf_vector(merged, stats))


@dataclass
class ContentRow:
    actor: str
    sentiment: float | None = None
    emotionality: float | None = None
    complexity: float | None = None
    influence: float | None = None


def period_events(events, period):
    start, end = period
    return [e for e in events if start <= e.timestamp < end]


def actor_influence(events, period, stats: CorpusStats,
                    window: float = INFLUENCE_WINDOW) -> dict[str, float]:
    """Mean influence over (sent email, recipient) pairs where the recipient followed up."""
    evs = sorted(period_events(events, period), key=lambda e: e.timestamp)
    _, end = period
    by_sender: dict[str, list] = {}
    for e in evs:
        by_sender.setdefault(e.sender, []).append(e)
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for e in evs:
        if not e.tokens:
            continue
        horizon = min(e.timestamp + window, end)
        for r in e.recipients:
            followups = [f.tokens for f in by_sender.get(r, ())
                         if e.timestamp < f.timestamp <= horizon and f.tokens]
            if not followups:
                continue
            sums[e.sender] = sums.get(e.sender, 0.0) + influence_index(e.tokens, followups, stats)
            counts[e.sender] = counts.get(e.sender, 0) + 1
    return {a: sums[a] / counts[a] for a in sums}


def content_indicators(events, period, lexicon: Mapping[str, float],
                       window: float = INFLUENCE_WINDOW) -> tuple[dict[str, ContentRow], CorpusStats]:
    """All four content indicators for the senders active in ``period``.

    Document frequencies are recomputed from the period's emails only.
    """
    evs = period_events(events, period)
    stats = CorpusStats.from_documents(e.tokens for e in evs)
    scores: dict[str, list[float]] = {}
    complexities: dict[str, list[float]] = {}
    for e in evs:
        if not e.tokens:
            continue
        scores.setdefault(e.sender, []).append(sentiment_score(e.tokens, lexicon))
        complexities.setdefault(e.sender, []).append(complexity_index(e.tokens, stats))
    influence = actor_influence(evs, period, stats, window)
    rows = {}
    for actor, s in scores.items():
        sent, emo = actor_sentiment_emotionality(s)
        cx = complexities[actor]
        rows[actor] = ContentRow(actor, sent, emo, sum(cx) / len(cx), influence.get(actor))
    return rows, stats
