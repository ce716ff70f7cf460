"""Binary-heap shortest-path primitives shared by every searching component.

Graphs are given as callables: ``forward(u)`` yields ``(v, cost, label)`` for
arcs ``u -> v`` and ``backward(v)`` yields ``(u, cost, label)`` for the same
arcs seen from their head. Nodes must be mutually comparable; heap ties are
broken by node order and predecessors change only on strict improvement, so
results are deterministic.
"""

from __future__ import annotations

import heapq
import math
from typing import Callable, Collection, Hashable, Iterable, Optional

INF = math.inf

Neighbours = Callable[[Hashable], Iterable[tuple[Hashable, float, object]]]


def shortest_paths(
    forward: Neighbours,
    source,
    targets: Optional[Collection] = None,
    expand: Optional[Callable[[Hashable], bool]] = None,
):
    """Single-source search; returns ``(dist, pred)`` for settled nodes.

    Stops once every node in ``targets`` is settled. ``expand(u)`` may veto
    relaxing the arcs of a settled node (used for terminal nodes).
    """
    dist = {source: 0.0}
    pred: dict = {}
    settled: dict = {}
    remaining = set(targets) if targets is not None else None
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in settled:
            continue
        settled[u] = d
        if remaining is not None:
            remaining.discard(u)
            if not remaining:
                break
        if expand is not None and not expand(u):
            continue
        for v, cost, label in forward(u):
            nd = d + cost
            if nd < dist.get(v, INF):
                dist[v] = nd
                pred[v] = (u, label)
                heapq.heappush(heap, (nd, v))
    return settled, pred


def trace(pred: dict, source, target) -> tuple[list, list]:
    """Node and label sequences of the predecessor chain ``source -> target``."""
    nodes = [target]
    labels = []
    while nodes[-1] != source:
        u, label = pred[nodes[-1]]
        nodes.append(u)
        labels.append(label)
    nodes.reverse()
    labels.reverse()
    return nodes, labels


def bidirectional(forward: Neighbours, backward: Neighbours, source, target):
    """Cost, node path and arc labels from ``source`` to ``target``.

    Returns ``(inf, [], [])`` when unreachable. Terminates when the sum of
    both queue tops reaches the best meeting cost.
    """
    if source == target:
        return 0.0, [source], []
    dist = ({source: 0.0}, {target: 0.0})
    pred: tuple[dict, dict] = ({}, {})
    done: tuple[set, set] = (set(), set())
    heaps = ([(0.0, source)], [(0.0, target)])
    step_fns = (forward, backward)
    best = INF
    meet = None
    while heaps[0] and heaps[1]:
        if heaps[0][0][0] + heaps[1][0][0] >= best:
            break
        side = 0 if heaps[0][0] <= heaps[1][0] else 1
        d, u = heapq.heappop(heaps[side])
        if u in done[side]:
            continue
        done[side].add(u)
        mine, other = dist[side], dist[1 - side]
        for v, cost, label in step_fns[side](u):
            nd = d + cost
            if nd < mine.get(v, INF):
                mine[v] = nd
                pred[side][v] = (u, label)
                heapq.heappush(heaps[side], (nd, v))
            if v in other:
                total = mine[v] + other[v]
                if total < best or (total == best and v < meet):
                    best, meet = total, v
        if u in other and d + other[u] < best:
            best, meet = d + other[u], u
    if meet is None:
        return INF, [], []
    head, head_labels = trace(pred[0], source, meet)
    tail, tail_labels = trace(pred[1], target, meet)
    tail.reverse()
    tail_labels.reverse()
    return best, head + tail[1:], head_labels + tail_labels
