"""Flat-graph planners: Dijkstra, bidirectional Dijkstra and contraction hierarchies."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .machines import MealyMachine
from .search import bidirectional, shortest_paths, trace

INF = math.inf


class StaleIndex(RuntimeError):
    pass


@dataclass
class Route:
    cost: float
    nodes: list[int]
    labels: list

    @property
    def found(self) -> bool:
        return self.cost < INF


UNREACHABLE = Route(INF, [], [])


class FlatGraph:
    """Directed graph over nodes ``0..n-1`` with labelled, costed arcs."""

    def __init__(self, n: int):
        self.n = n
        self.succ: list[list[tuple[int, float, object]]] = [[] for _ in range(n)]
        self.pred: list[list[tuple[int, float, object]]] = [[] for _ in range(n)]
        self.version = 0

    def add_arc(self, u: int, v: int, cost: float, label=None) -> None:
        if cost < 0:
            raise ValueError("arc costs must be non-negative")
        self.succ[u].append((v, float(cost), label))
        self.pred[v].append((u, float(cost), label))
        self.version += 1

    @classmethod
    def from_machine(cls, machine: MealyMachine) -> tuple["FlatGraph", dict[int, int]]:
        """Graph of a machine; returns it with the state -> node map."""
        ids = {q: i for i, q in enumerate(machine.states)}
        graph = cls(len(ids))
        for q, a, target, cost in machine.transitions():
            graph.add_arc(ids[q], ids[target], cost, a)
        return graph, ids

    @classmethod
    def from_arcs(cls, n: int, arcs: Iterable[tuple[int, int, float]]) -> "FlatGraph":
        graph = cls(n)
        for u, v, c in arcs:
            graph.add_arc(u, v, c)
        return graph

    def num_arcs(self) -> int:
        return sum(map(len, self.succ))


def dijkstra(graph: FlatGraph, source: int, targets: Optional[Iterable[int]] = None) -> dict[int, Route]:
    """Shortest routes from ``source`` to each target (all nodes if omitted)."""
    wanted = set(range(graph.n)) if targets is None else set(targets)
    settled, pred = shortest_paths(graph.succ.__getitem__, source, wanted)
    out = {}
    for t in wanted:
        if t in settled:
            nodes, labels = trace(pred, source, t)
            out[t] = Route(settled[t], nodes, labels)
        else:
            out[t] = UNREACHABLE
    return out


def bidirectional_dijkstra(graph: FlatGraph, source: int, target: int) -> Route:
    cost, nodes, labels = bidirectional(graph.succ.__getitem__, graph.pred.__getitem__, source, target)
    return Route(cost, nodes, labels)


def replay_cost(graph: FlatGraph, nodes: list[int]) -> float:
    """Cost of walking ``nodes`` using the cheapest arc between each pair."""
    total = 0.0
    for u, v in zip(nodes, nodes[1:]):
        total += min((c for w, c, _ in graph.succ[u] if w == v), default=INF)
    return total


# contraction hierarchies --------------------------------------------------


@dataclass
class ChIndex:
    rank: list[int]
    up: list[list[tuple[int, float]]]
    down: list[list[tuple[int, float]]]
    middle: dict[tuple[int, int], Optional[int]]
    version: int
    shortcuts: int
    descending_relaxations: int = field(default=0)


def _witness_cost(out: list[dict[int, float]], source: int, skip: int, limit: float, targets: set[int], settle_limit: int) -> dict[int, float]:
    """Bounded search from ``source`` avoiding ``skip``; returns settled distances."""
    settled: dict[int, float] = {}
    dist = {source: 0.0}
    heap = [(0.0, source)]
    remaining = set(targets)
    while heap and len(settled) < settle_limit and remaining:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        if d > limit:
            break
        settled[u] = d
        remaining.discard(u)
        for v, c in out[u].items():
            if v == skip:
                continue
            nd = d + c
            if nd < dist.get(v, INF):
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return settled


def _needed_shortcuts(out, inn, v: int, settle_limit: int) -> list[tuple[int, int, float]]:
    needed = []
    outs = [(w, c) for w, c in out[v].items() if w != v]
    if not outs:
        return needed
    for u, cu in inn[v].items():
        if u == v:
            continue
        limit = cu + max(c for _, c in outs)
        targets = {w for w, _ in outs if w != u}
        if not targets:
            continue
        witnessed = _witness_cost(out, u, v, limit, targets, settle_limit)
        for w, cw in outs:
            if w == u:
                continue
            via = cu + cw
            if witnessed.get(w, INF) > via:
                needed.append((u, w, via))
    return needed


def ch_preprocess(graph: FlatGraph, witness_limit: int = 16) -> ChIndex:
    """Contract nodes lazily by edge difference plus contracted-neighbour count."""
    n = graph.n
    out: list[dict[int, float]] = [dict() for _ in range(n)]
    inn: list[dict[int, float]] = [dict() for _ in range(n)]
    middle: dict[tuple[int, int], Optional[int]] = {}
    for u in range(n):
        for v, c, _ in graph.succ[u]:
            if u == v:
                continue
            if c < out[u].get(v, INF):
                out[u][v] = c
                inn[v][u] = c
                middle[(u, v)] = None
    contracted_neighbours = [0] * n

    def priority(v: int) -> int:
        shortcuts = len(_needed_shortcuts(out, inn, v, witness_limit))
        return shortcuts - len(out[v]) - len(inn[v]) + contracted_neighbours[v]

    heap = [(priority(v), v) for v in range(n)]
    heapq.heapify(heap)
    rank = [-1] * n
    up: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    down: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    order = 0
    added = 0
    while heap:
        _, v = heapq.heappop(heap)
        if rank[v] >= 0:
            continue
        fresh = priority(v)
        if heap and fresh > heap[0][0]:
            heapq.heappush(heap, (fresh, v))
            continue
        for u, w, via in _needed_shortcuts(out, inn, v, witness_limit):
            if via < out[u].get(w, INF):
                out[u][w] = via
                inn[w][u] = via
                middle[(u, w)] = v
                added += 1
        rank[v] = order
        order += 1
        for w, c in out[v].items():
            up[v].append((w, c))
            del inn[w][v]
            contracted_neighbours[w] += 1
        for u, c in inn[v].items():
            down[v].append((u, c))
            del out[u][v]
            contracted_neighbours[u] += 1
        out[v] = {}
        inn[v] = {}
    return ChIndex(rank, up, down, middle, graph.version, added)


def _unpack(index: ChIndex, u: int, w: int, into: list[int]) -> None:
    stack = [(u, w)]
    while stack:
        a, b = stack.pop()
        mid = index.middle[(a, b)]
        if mid is None:
            into.append(b)
        else:
            stack.append((mid, b))
            stack.append((a, mid))


def ch_query(index: ChIndex, graph: FlatGraph, source: int, target: int) -> Route:
    """Upward bidirectional search; the returned path is fully unpacked."""
    if index.version != graph.version:
        raise StaleIndex("graph changed after preprocessing")
    if source == target:
        return Route(0.0, [source], [])
    rank = index.rank

    def forward(u):
        for v, c in index.up[u]:
            if rank[v] < rank[u]:
                index.descending_relaxations += 1
            yield v, c, None

    def backward(u):
        for v, c in index.down[u]:
            if rank[v] < rank[u]:
                index.descending_relaxations += 1
            yield v, c, None

    dist_f, pred_f = _upward(forward, source)
    dist_b, pred_b = _upward(backward, target)
    best, meet = INF, None
    for v, d in dist_f.items():
        other = dist_b.get(v)
        if other is not None and (d + other < best or (d + other == best and v < meet)):
            best, meet = d + other, v
    if meet is None:
        return UNREACHABLE
    head, _ = trace(pred_f, source, meet)
    tail, _ = trace(pred_b, target, meet)
    tail.reverse()
    nodes = [source]
    for a, b in zip(head, head[1:]):
        _unpack(index, a, b, nodes)
    for a, b in zip(tail, tail[1:]):
        _unpack(index, a, b, nodes)
    return Route(best, nodes, _labels_along(graph, nodes))


def _upward(neighbours, source):
    return shortest_paths(neighbours, source)


def _labels_along(graph: FlatGraph, nodes: list[int]) -> list:
    labels = []
    for u, v in zip(nodes, nodes[1:]):
        best = min(((c, i) for i, (w, c, _) in enumerate(graph.succ[u]) if w == v), default=None)
        labels.append(None if best is None else graph.succ[u][best[1]][2])
    return labels
