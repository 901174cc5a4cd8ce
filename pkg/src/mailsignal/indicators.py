"""Per-actor, per-period indicator table assembled from every indicator module."""

from __future__ import annotations

import csv
from dataclasses import dataclass

from . import content, dynamics, netgraph, topics
from .ingest import REPLY_HORIZON, Corpus, resolve_replies

HOURS = 3600.0

NETWORK_COLUMNS = ["actor", "period", "betweenness", "closeness", "degree", "messages_sent",
                   "messages_received", "contribution_index"]
DYNAMICS_COLUMNS = ["actor", "period", "bet_osc", "ego_nudges", "alter_nudges",
                    "ego_art_hours", "alter_art_hours"]
CONTENT_COLUMNS = ["actor", "period", "sentiment", "emotionality", "complexity", "influence"]


@dataclass
class IndicatorOptions:
    week: float = dynamics.WEEK
    influence_window: float = content.INFLUENCE_WINDOW
    reply_horizon: float = REPLY_HORIZON
    topics: int = 6
    top_k: int = 10
    lda_alpha: float | None = None
    lda_beta: float = 0.01
    lda_iterations: int = 1000
    seed: int = 0


@dataclass
class IndicatorTables:
    network: list[dict]
    dynamics: list[dict]
    content: list[dict]
    merged: list[dict]
    topic_model: topics.TopicModel | None
    documents: list[topics.ActorDocument]


def _hours(v):
    return None if v is None else v / HOURS


def compute(corpus: Corpus, lexicon, options: IndicatorOptions | None = None) -> IndicatorTables:
    """Compute every indicator for every actor in every period.

    Rows cover all actors seen anywhere in the corpus; periods are numbered
    from 1. Controls and labels come from the attributes map and are left
    empty for actors without attributes.
    """
    opt = options or IndicatorOptions()
    actors = corpus.actors
    replies = resolve_replies(corpus.events, opt.reply_horizon)
    net_rows, dyn_rows, con_rows = [], [], []
    documents = []
    for p, period in enumerate(corpus.periods, start=1):
        net = netgraph.network_rows(corpus.events, period, actors)
        dyn = dynamics.dynamics_rows(corpus.events, replies, period, actors, opt.week)
        con, stats = content.content_indicators(corpus.events, period, lexicon, opt.influence_window)
        emails: dict[str, list] = {}
        for e in content.period_events(corpus.events, period):
            if e.tokens:
                emails.setdefault(e.sender, []).append(e.tokens)
        for a in actors:
            net_rows.append({"actor": a, "period": p, **net[a]})
            d = dyn[a]
            dyn_rows.append({"actor": a, "period": p, "bet_osc": d.bet_osc,
                             "ego_nudges": d.ego_nudges, "alter_nudges": d.alter_nudges,
                             "ego_art_hours": _hours(d.ego_art),
                             "alter_art_hours": _hours(d.alter_art)})
            c = con.get(a, content.ContentRow(a))
            con_rows.append({"actor": a, "period": p, "sentiment": c.sentiment,
                             "emotionality": c.emotionality, "complexity": c.complexity,
                             "influence": c.influence})
            if a in emails:
                doc = topics.top_words(a, p, emails[a], stats, opt.top_k)
                if doc is not None:
                    documents.append(doc)

    model = None
    shares = {}
    if opt.topics and documents:
        keys = [(d.actor, d.period) for d in documents]
        model = topics.fit_lda([d.terms for d in documents], opt.topics, opt.lda_alpha,
                               opt.lda_beta, opt.lda_iterations, opt.seed, keys)
        shares = topics.topic_features(model, [(r["actor"], r["period"]) for r in net_rows])

    merged = []
    for n_row, d_row, c_row in zip(net_rows, dyn_rows, con_rows):
        a, p = n_row["actor"], n_row["period"]
        row = {**n_row, **d_row, **c_row}
        attrs = corpus.attributes.get(a)
        row.update({
            "age": attrs.age if attrs else None,
            "band": attrs.band if attrs else None,
            "tenure": attrs.tenure if attrs else None,
            "tslp": attrs.tslp if attrs else None,
            "has_attributes": int(attrs is not None),
        })
        if model is not None:
            values, missing = shares[(a, p)]
            row.update({f"topic_{i + 1}": v for i, v in enumerate(values)})
            row["topic_missing"] = int(missing)
        row["label"] = attrs.label(p - 1) if attrs else None
        merged.append(row)
    return IndicatorTables(net_rows, dyn_rows, con_rows, merged, model, documents)


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(rows: list[dict], path, columns=None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])


def modeling_rows(rows: list[dict]) -> list[dict]:
    """Rows usable for modeling: actor has attributes and a label for the period."""
    return [r for r in rows if str(r.get("has_attributes", "1")) in ("1", "1.0", "True")
            and r.get("label") not in (None, "")]
