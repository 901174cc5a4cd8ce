"""Per-period communication graphs, centralities and contribution counts.

Shortest paths use unit arc lengths on the directed graph; the email counts
stored on arcs are for reporting only.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True)
class CommGraph:
    nodes: tuple[str, ...]
    arcs: dict[tuple[str, str], int] = field(default_factory=dict)
    period: tuple[float, float] | None = None

    @property
    def n(self) -> int:
        return len(self.nodes)

    def successors(self) -> dict[str, list[str]]:
        out = {v: [] for v in self.nodes}
        for (a, b) in sorted(self.arcs):
            out[a].append(b)
        return out


def build_graph(events, period=None, nodes: Iterable[str] = ()) -> CommGraph:
    """Directed graph of who emailed whom, weighted by email count.

    ``nodes`` adds actors that should be present even without traffic.
    """
    arcs: dict[tuple[str, str], int] = {}
    present = set(nodes)
    for e in events:
        if period is not None and not (period[0] <= e.timestamp < period[1]):
            continue
        present.add(e.sender)
        for r in e.recipients:
            if r == e.sender:
                continue
            present.add(r)
            arcs[(e.sender, r)] = arcs.get((e.sender, r), 0) + 1
    return CommGraph(tuple(sorted(present)), arcs, tuple(period) if period is not None else None)


def betweenness(graph: CommGraph) -> dict[str, float]:
    """Brandes' algorithm on the unweighted digraph, ordered source/target pairs."""
    succ = graph.successors()
    bc = dict.fromkeys(graph.nodes, 0.0)
    for s in graph.nodes:
        order = []
        preds: dict[str, list[str]] = {v: [] for v in graph.nodes}
        sigma = dict.fromkeys(graph.nodes, 0)
        dist = dict.fromkeys(graph.nodes, -1)
        sigma[s] = 1
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in succ[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = dict.fromkeys(graph.nodes, 0.0)
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    return bc


def hop_distances(succ: dict[str, list[str]], source: str) -> dict[str, int]:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def closeness(graph: CommGraph) -> dict[str, float]:
    """Closeness over the reachable set, scaled by the reachable fraction.

    With R nodes reachable from i, the score is ``(R/(N-1)) * (R / sum d_ij)``,
    which reduces to ``(N-1) / sum d_ij`` on strongly connected graphs.
    """
    succ = graph.successors()
    n = graph.n
    out = {}
    for v in graph.nodes:
        dist = hop_distances(succ, v)
        reach = len(dist) - 1
        if reach == 0 or n < 2:
            out[v] = 0.0
            continue
        out[v] = (reach / (n - 1)) * (reach / sum(dist.values()))
    return out


def degree(graph: CommGraph) -> dict[str, int]:
    """Number of distinct contacts, in either direction."""
    contacts: dict[str, set[str]] = {v: set() for v in graph.nodes}
    for a, b in graph.arcs:
        contacts[a].add(b)
        contacts[b].add(a)
    return {v: len(c) for v, c in contacts.items()}


@dataclass
class ContributionRow:
    actor: str
    messages_sent: int = 0
    messages_received: int = 0

    @property
    def contribution_index(self) -> float | None:
        total = self.messages_sent + self.messages_received
        if total == 0:
            return None
        return (self.messages_sent - self.messages_received) / total


def contribution(events, period=None) -> dict[str, ContributionRow]:
    """Sent counts each email once; received counts each email naming the actor once."""
    rows: dict[str, ContributionRow] = {}
    for e in events:
        if period is not None and not (period[0] <= e.timestamp < period[1]):
            continue
        rows.setdefault(e.sender, ContributionRow(e.sender)).messages_sent += 1
        for r in set(e.recipients):
            if r != e.sender:
                rows.setdefault(r, ContributionRow(r)).messages_received += 1
    return rows


def network_rows(events, period, actors: Iterable[str]) -> dict[str, dict]:
    """Centrality and contribution values for ``actors`` in one period.

    The graph spans everyone active in the period; actors without traffic get
    zero centralities and a missing contribution index.
    """
    g = build_graph(events, period)
    bet, clo, deg = betweenness(g), closeness(g), degree(g)
    contrib = contribution(events, period)
    rows = {}
    for a in actors:
        c = contrib.get(a, ContributionRow(a))
        rows[a] = {
            "betweenness": bet.get(a, 0.0),
            "closeness": clo.get(a, 0.0),
            "degree": deg.get(a, 0),
            "messages_sent": c.messages_sent,
            "messages_received": c.messages_received,
            "contribution_index": c.contribution_index,
        }
    return rows
