"""Optimal exit costs per machine and their witness trajectories.

For machine ``M`` and input ``a``, ``c[M][a]`` is the cheapest way to leave
``M``'s subtree with final input ``a`` after entering at ``start(M)``,
excluding the final transition's own cost. Costs are found by searching the
augmented machine, which routes every unsupported ``(q, a)`` to a sink
``E_a`` and folds each child's exit costs into the arcs leaving its state.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .hierarchy import DEFAULT_FLATTEN_BUDGET, Himm, flatten
from .machines import MealyMachine

INF = math.inf

Witness = tuple[tuple[int, int], ...]

# Node keys in the augmented machine: (0, state) for states, (1, a) for sinks.
STATE, SINK = 0, 1


@dataclass(frozen=True)
class AugmentedMachine:
    base: MealyMachine
    child_costs: dict[int, Sequence[float]]

    def arcs(self, q: int):
        """Yield ``(input, node, cost)`` for every input at state ``q``."""
        row = self.base.arcs.get(q, {})
        extra = self.child_costs.get(q)
        for a in range(self.base.num_inputs):
            bonus = extra[a] if extra is not None else 0.0
            hit = row.get(a)
            if hit is None:
                yield a, (SINK, a), bonus
            else:
                yield a, (STATE, hit[0]), hit[1] + bonus


def build_augmented(machine: MealyMachine, child_costs: Optional[dict[int, Sequence[float]]] = None) -> AugmentedMachine:
    """Leaf states carry zero exit cost and need no entry in ``child_costs``."""
    return AugmentedMachine(machine, dict(child_costs or {}))


def search_exits(aug: AugmentedMachine) -> tuple[list[float], list[Optional[Witness]]]:
    """Cheapest route from the start state to every sink."""
    k = aug.base.num_inputs
    start = (STATE, aug.base.start)
    dist = {start: 0.0}
    pred: dict = {}
    settled = set()
    sinks_left = k
    heap = [(0.0, start)]
    while heap and sinks_left:
        d, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        if node[0] == SINK:
            sinks_left -= 1
            continue
        q = node[1]
        for a, nxt, cost in aug.arcs(q):
            nd = d + cost
            if nd < dist.get(nxt, INF):
                dist[nxt] = nd
                pred[nxt] = (q, a)
                heapq.heappush(heap, (nd, nxt))
    costs: list[float] = []
    witnesses: list[Optional[Witness]] = []
    for a in range(k):
        sink = (SINK, a)
        if sink not in settled:
            costs.append(INF)
            witnesses.append(None)
            continue
        steps = []
        node = sink
        while node != start:
            q, b = pred[node]
            steps.append((q, b))
            node = (STATE, q)
        steps.reverse()
        costs.append(dist[sink])
        witnesses.append(tuple(steps))
    return costs, witnesses


def replay_witness(aug: AugmentedMachine, witness: Witness) -> Optional[tuple[tuple[int, int], float]]:
    """Follow a witness through the augmented machine; returns final node and cost."""
    node = (STATE, aug.base.start)
    total = 0.0
    for q, a in witness:
        if node != (STATE, q):
            return None
        for b, nxt, cost in aug.arcs(q):
            if b == a:
                node, total = nxt, total + cost
                break
    return node, total


class ExitCostTable:
    """Per-machine exit costs and witnesses, plus a running search counter."""

    def __init__(self):
        self.cost: dict[int, tuple[float, ...]] = {}
        self.witness: dict[int, tuple[Optional[Witness], ...]] = {}
        self.searches = 0

    def __contains__(self, mid: int) -> bool:
        return mid in self.cost

    def update(self, other: "ExitCostTable") -> None:
        self.cost.update(other.cost)
        self.witness.update(other.witness)

    def restricted(self, mids: Iterable[int]) -> "ExitCostTable":
        out = ExitCostTable()
        for mid in mids:
            if mid in self.cost:
                out.cost[mid] = self.cost[mid]
                out.witness[mid] = self.witness[mid]
        return out

    def same_entries(self, other: "ExitCostTable", mids: Iterable[int]) -> bool:
        return all(
            self.cost.get(m) == other.cost.get(m) and self.witness.get(m) == other.witness.get(m)
            for m in mids
        )

    def child_costs(self, z: Himm, mid: int) -> dict[int, tuple[float, ...]]:
        return {q: self.cost[kid] for q, kid in z.children[mid].items()}


class DirtyTable(RuntimeError):
    pass


def augmented_for(z: Himm, table: ExitCostTable, mid: int) -> AugmentedMachine:
    return build_augmented(z.machines[mid], table.child_costs(z, mid))


def compute_optimal_exits(z: Himm, marks: set[int], table: ExitCostTable) -> int:
    """Rebuild entries for marked (or never computed) machines; returns searches done.

    Post-order from the root; an unmarked machine with an entry is trusted
    together with its whole subtree. Each rebuilt machine is unmarked, so a
    machine shared by several parents is searched once.
    """
    searches = 0
    stack = [(z.root, False)]
    while stack:
        mid, ready = stack.pop()
        if mid not in marks and mid in table:
            continue
        if not ready:
            stack.append((mid, True))
            for kid in set(z.children[mid].values()):
                if kid in marks or kid not in table:
                    stack.append((kid, False))
            continue
        costs, witnesses = search_exits(augmented_for(z, table, mid))
        table.cost[mid] = tuple(costs)
        table.witness[mid] = tuple(witnesses)
        marks.discard(mid)
        searches += 1
    table.searches += searches
    return searches


def fresh_table(z: Himm) -> tuple[ExitCostTable, int]:
    """Build a complete table from scratch; returns it with the search count."""
    table = ExitCostTable()
    marks = set(z.reachable_machines())
    return table, compute_optimal_exits(z, marks, table)


def exit_cost_oracle(z: Himm, mid: int, a: int, budget: int = DEFAULT_FLATTEN_BUDGET) -> float:
    """Brute-force exit cost over the flattened subtree of ``mid``.

    Dijkstra from the subtree's start leaf; an ``a``-exit is any leaf where
    ``a`` is unsupported anywhere inside the subtree. The final cost is not
    charged.
    """
    flat = flatten(z.subsystem(mid), budget)
    machine = flat.machine
    dist = {machine.start: 0.0}
    heap = [(0.0, machine.start)]
    done = set()
    best = INF
    while heap:
        d, q = heapq.heappop(heap)
        if q in done:
            continue
        done.add(q)
        row = machine.arcs.get(q, {})
        if a not in row:
            best = min(best, d)
        for target, cost in row.values():
            if d + cost < dist.get(target, INF):
                dist[target] = d + cost
                heapq.heappush(heap, (d + cost, target))
    return best

