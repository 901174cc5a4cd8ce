"""Betweenness oscillation, nudges and average response time."""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Sequence

from .netgraph import betweenness, build_graph

WEEK = 7 * 86400.0


@dataclass
class DynamicsRow:
    actor: str
    bet_osc: int | None = None
    ego_nudges: float | None = None
    alter_nudges: float | None = None
    ego_art: float | None = None
    alter_art: float | None = None


def windows(period, window: float = WEEK) -> list[tuple[float, float]]:
    start, end = period
    count = math.ceil((end - start) / window - 1e-9)
    return [(start + i * window, min(start + (i + 1) * window, end)) for i in range(count)]


def betweenness_series(events, period, actors: Iterable[str],
                       window: float = WEEK) -> dict[str, list[float]]:
    """One betweenness value per consecutive sub-window; absent actors score 0."""
    actors = list(actors)
    series: dict[str, list[float]] = {a: [] for a in actors}
    for w in windows(period, window):
        bc = betweenness(build_graph(events, w))
        for a in actors:
            series[a].append(bc.get(a, 0.0))
    return series


def oscillation(series: Sequence[float]) -> int | None:
    """Count strict local extrema after collapsing runs of equal values."""
    if len(series) < 3:
        return None
    collapsed = [series[0]]
    for v in series[1:]:
        if v != collapsed[-1]:
            collapsed.append(v)
    return sum(
        1 for k in range(1, len(collapsed) - 1)
        if (collapsed[k] - collapsed[k - 1]) * (collapsed[k + 1] - collapsed[k]) < 0
    )


@dataclass(frozen=True)
class Response:
    prompter: str
    responder: str
    delay: float
    nudges: int  # prompter->responder emails pending when the response arrived


def responses(events, replies: dict[str, set[str]], period=None) -> list[Response]:
    """Replay the period's events and emit one record per response.

    Both the prompting email and the response must fall inside ``period``.
    A response clears the pending counter for its (prompter, responder) pair.
    """
    if period is not None:
        events = [e for e in events if period[0] <= e.timestamp < period[1]]
    events = sorted(events, key=lambda e: (e.timestamp, e.message_id))
    by_id = {e.message_id: e for e in events}
    answered_by = {}
    for mid, rs in replies.items():
        if mid not in by_id:
            continue
        for r in rs:
            answered_by.setdefault(r, []).append(mid)
    pending: dict[tuple[str, str], int] = {}
    out = []
    for e in events:
        for mid in sorted(answered_by.get(e.message_id, ()), key=lambda m: (by_id[m].timestamp, m)):
            prompt = by_id[mid]
            if prompt.sender == e.sender or prompt.timestamp >= e.timestamp:
                continue
            key = (prompt.sender, e.sender)
            out.append(Response(prompt.sender, e.sender, e.timestamp - prompt.timestamp,
                                pending.get(key, 0)))
            pending[key] = 0
        for r in e.recipients:
            pending[(e.sender, r)] = pending.get((e.sender, r), 0) + 1
    return out


def nudges_and_art(events, replies, period=None) -> dict[str, DynamicsRow]:
    """Ego/alter nudges and ego/alter average response time (seconds).

    Pair nudges average the pending counts over a pair's responses; responses
    that find no pending email (a second answer to one batch) carry no nudge
    sample but still contribute their delay.
    """
    pair_nudges: dict[tuple[str, str], list[int]] = {}
    ego_delays: dict[str, list[float]] = {}
    alter_delays: dict[str, list[float]] = {}
    for r in responses(events, replies, period):
        ego_delays.setdefault(r.responder, []).append(r.delay)
        alter_delays.setdefault(r.prompter, []).append(r.delay)
        if r.nudges > 0:
            pair_nudges.setdefault((r.prompter, r.responder), []).append(r.nudges)

    ego_n: dict[str, list[float]] = {}
    alter_n: dict[str, list[float]] = {}
    for (prompter, responder), counts in sorted(pair_nudges.items()):
        value = fmean(counts)
        ego_n.setdefault(prompter, []).append(value)
        alter_n.setdefault(responder, []).append(value)

    rows: dict[str, DynamicsRow] = {}
    for actor in set(ego_n) | set(alter_n) | set(ego_delays) | set(alter_delays):
        rows[actor] = DynamicsRow(
            actor,
            ego_nudges=fmean(ego_n[actor]) if actor in ego_n else None,
            alter_nudges=fmean(alter_n[actor]) if actor in alter_n else None,
            ego_art=fmean(ego_delays[actor]) if actor in ego_delays else None,
            alter_art=fmean(alter_delays[actor]) if actor in alter_delays else None,
        )
    return rows


def dynamics_rows(events, replies, period, actors: Iterable[str],
                  window: float = WEEK) -> dict[str, DynamicsRow]:
    actors = list(actors)
    rows = nudges_and_art(events, replies, period)
    short = len(windows(period, window)) < 3
    series = {} if short else betweenness_series(events, period, actors, window)
    out = {}
    for a in actors:
        row = rows.get(a, DynamicsRow(a))
        row.bet_osc = None if short else oscillation(series[a])
        out[a] = row
    return out
