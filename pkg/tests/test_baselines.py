import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from himm.baselines import (
    FlatGraph,
    StaleIndex,
    bidirectional_dijkstra,
    ch_preprocess,
    ch_query,
    dijkstra,
    replay_cost,
)


def floyd_warshall(graph):
    n = graph.n
    dist = [[math.inf] * n for _ in range(n)]
    for u in range(n):
        dist[u][u] = 0.0
        for v, c, _ in graph.succ[u]:
            dist[u][v] = min(dist[u][v], c)
    for k in range(n):
        dk = dist[k]
        for i in range(n):
            dik = dist[i][k]
            if dik == math.inf:
                continue
            di = dist[i]
            for j in range(n):
                if dik + dk[j] < di[j]:
                    di[j] = dik + dk[j]
    return dist


def random_graph(rng, n, arcs_per_node=3, max_cost=9):
    graph = FlatGraph(n)
    for u in range(n):
        for _ in range(rng.randint(0, arcs_per_node)):
            graph.add_arc(u, rng.randrange(n), rng.randint(0, max_cost))
    return graph


def test_trivial_and_unreachable():
    graph = FlatGraph.from_arcs(3, [(0, 1, 2)])
    assert dijkstra(graph, 0, [0])[0].cost == 0
    assert not dijkstra(graph, 0, [2])[2].found
    assert not bidirectional_dijkstra(graph, 0, 2).found
    index = ch_preprocess(graph)
    assert ch_query(index, graph, 1, 1).cost == 0
    assert not ch_query(index, graph, 0, 2).found


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        FlatGraph.from_arcs(2, [(0, 1, -1)])


def test_stale_index():
    graph = FlatGraph.from_arcs(2, [(0, 1, 1)])
    index = ch_preprocess(graph)
    graph.add_arc(1, 0, 1)
    with pytest.raises(StaleIndex):
        ch_query(index, graph, 0, 1)


@given(st.integers(0, 10**6), st.integers(1, 40))
def test_all_methods_agree_with_floyd_warshall(seed, n):
    rng = random.Random(seed)
    graph = random_graph(rng, n)
    dist = floyd_warshall(graph)
    index = ch_preprocess(graph)
    for s in range(n):
        routes = dijkstra(graph, s)
        for t in range(n):
            want = dist[s][t]
            assert routes[t].cost == want
            assert bidirectional_dijkstra(graph, s, t).cost == want
            route = ch_query(index, graph, s, t)
            assert route.cost == want
            if route.found:
                assert route.nodes[0] == s and route.nodes[-1] == t
                assert replay_cost(graph, route.nodes) == want
    assert index.descending_relaxations == 0


def test_zero_cost_cycles():
    graph = FlatGraph.from_arcs(4, [(0, 1, 0), (1, 0, 0), (1, 2, 0), (2, 3, 5), (0, 3, 6)])
    index = ch_preprocess(graph)
    for s in range(4):
        for t in range(4):
            want = dijkstra(graph, s, [t])[t].cost
            assert bidirectional_dijkstra(graph, s, t).cost == want
            assert ch_query(index, graph, s, t).cost == want


def test_machine_graph_labels_are_inputs(example):
    from himm.hierarchy import flatten

    flat = flatten(example)
    graph, ids = FlatGraph.from_machine(flat.machine)
    s = ids[flat.index[example.find("B", "3")]]
    t = ids[flat.index[example.find("C", "6")]]
    route = dijkstra(graph, s, [t])[t]
    assert route.cost == 2.0 and route.labels == [2, 1]
