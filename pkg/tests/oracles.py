"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import itertools


def all_shortest_paths(nodes, arcs):
    """Enumerate every simple path per ordered pair and keep the shortest ones."""
    succ = {v: [b for (a, b) in arcs if a == v] for v in nodes}
    best: dict[tuple, list] = {}

    def walk(path):
        v = path[-1]
        if len(path) > 1:
            key = (path[0], v)
            cur = best.get(key)
            if cur is None or len(path) < len(cur[0]):
                best[key] = [tuple(path)]
            elif len(path) == len(cur[0]):
                cur.append(tuple(path))
        for w in succ[v]:
            if w not in path:
                walk(path + [w])

    for s in nodes:
        walk([s])
    return best


def betweenness_oracle(nodes, arcs):
    paths = all_shortest_paths(nodes, arcs)
    bc = {v: 0.0 for v in nodes}
    for (s, t), ps in paths.items():
        for v in nodes:
            if v in (s, t):
                continue
            through = sum(1 for p in ps if v in p[1:-1])
            bc[v] += through / len(ps)
    return bc


def distance_oracle(nodes, arcs):
    """Floyd-Warshall hop distances."""
    inf = float("inf")
    d = {(a, b): (0 if a == b else (1 if (a, b) in arcs else inf)) for a in nodes for b in nodes}
    for k, i, j in itertools.product(nodes, nodes, nodes):
        if d[i, k] + d[k, j] < d[i, j]:
            d[i, j] = d[i, k] + d[k, j]
    return d


def closeness_oracle(nodes, arcs):
    d = distance_oracle(nodes, arcs)
    n = len(nodes)
    out = {}
    for v in nodes:
        reach = [d[v, w] for w in nodes if w != v and d[v, w] < float("inf")]
        out[v] = 0.0 if not reach else (len(reach) / (n - 1)) * (len(reach) / sum(reach))
    return out


def degree_oracle(nodes, arcs):
    return {v: len({b for (a, b) in arcs if a == v} | {a for (a, b) in arcs if b == v}) for v in nodes}


def random_digraph(rng, max_nodes=8):
    n = rng.randint(1, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    p = rng.random()
    arcs = {(a, b) for a in nodes for b in nodes if a != b and rng.random() < p}
    return nodes, arcs
