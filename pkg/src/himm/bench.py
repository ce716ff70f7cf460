"""Benchmark harness for the two studies: timings per method and phase, with a cost gate."""

from __future__ import annotations

import csv
import math
import statistics
import time
import timeit
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .baselines import FlatGraph, bidirectional_dijkstra, ch_preprocess, ch_query, dijkstra
from .exits import ExitCostTable, fresh_table
from .generators import Warehouse, gen_recursive, gen_warehouse, house_subtree, recursive_endpoints
from .hierarchy import Himm, Path, flatten
from .planner import plan
from .system import LiveSystem

COLUMNS = ("system_id", "depth", "num_machines", "flat_states", "method", "phase", "wall_ms", "cost", "s_init", "s_goal", "seed")


class CostMismatch(AssertionError):
    pass


@dataclass
class BenchRecord:
    system_id: str
    depth: int
    num_machines: int
    flat_states: int
    method: str
    phase: str
    wall_ms: float
    cost: Optional[float]
    s_init: str
    s_goal: str
    seed: int


def measure(fn: Callable[[], object], repeats: int = 5, min_total: float = 0.05) -> tuple[float, object]:
    """Median wall time in ms over ``repeats`` runs; fast calls are looped to beat timer noise."""
    result = fn()
    start = time.perf_counter()
    fn()
    once = time.perf_counter() - start
    number = 1 if once >= min_total else max(1, int(math.ceil(min_total / max(once, 1e-7))))
    samples = timeit.Timer(fn).repeat(repeat=max(repeats, 1), number=number)
    return statistics.median(samples) / number * 1000.0, result


def _fmt(path: Sequence[int]) -> str:
    return ".".join(map(str, path))


def check_costs(records: Sequence[BenchRecord]) -> None:
    """All query rows of one instance must report the same cost."""
    groups: dict[tuple, set] = {}
    for r in records:
        if r.phase == "query":
            groups.setdefault((r.system_id, r.s_init, r.s_goal), set()).add(r.cost)
    for key, costs in groups.items():
        if len(costs) > 1:
            raise CostMismatch(f"methods disagree on {key}: {sorted(costs)}")


class _Instance:
    """Shared bookkeeping for one benchmarked system and query."""

    def __init__(self, system_id: str, z: Himm, init: Path, goal: Path, seed: int, repeats: int):
        self.system_id, self.z, self.init, self.goal = system_id, z, tuple(init), tuple(goal)
        self.seed, self.repeats = seed, repeats
        self.depth = z.depth()
        self.num_machines = len(z.reachable_machines())
        self.flat_states = z.leaf_count()
        self.records: list[BenchRecord] = []

    def record(self, method: str, phase: str, wall_ms: float, cost: Optional[float]) -> BenchRecord:
        rec = BenchRecord(
            self.system_id, self.depth, self.num_machines, self.flat_states, method, phase,
            round(wall_ms, 6), cost, _fmt(self.init), _fmt(self.goal), self.seed,
        )
        self.records.append(rec)
        return rec

    def hierarchical(self, method: str = "hier", table: Optional[ExitCostTable] = None) -> ExitCostTable:
        if table is None:
            ms, (table, _) = measure(lambda: fresh_table(self.z), self.repeats)
            self.record(method, "preprocess", ms, None)
        ms, result = measure(lambda: plan(self.z, table, self.init, self.goal), self.repeats)
        self.record(method, "query", ms, result.cost)
        return table

    def flat(self, methods: Iterable[str]) -> None:
        flat = flatten(self.z)
        graph, ids = FlatGraph.from_machine(flat.machine)
        s, t = ids[flat.index[self.init]], ids[flat.index[self.goal]]
        methods = set(methods)
        if "dijkstra" in methods:
            ms, routes = measure(lambda: dijkstra(graph, s, [t]), self.repeats)
            self.record("dijkstra", "query", ms, routes[t].cost)
        if "bidi" in methods:
            ms, route = measure(lambda: bidirectional_dijkstra(graph, s, t), self.repeats)
            self.record("bidi", "query", ms, route.cost)
        if "ch" in methods:
            ms, index = measure(lambda: ch_preprocess(graph), 1, min_total=0.0)
            self.record("ch", "preprocess", ms, None)
            ms, route = measure(lambda: ch_query(index, graph, s, t), self.repeats)
            self.record("ch", "query", ms, route.cost)


def study1(
    depths: Sequence[int] = range(3, 15),
    methods: Sequence[str] = ("hier", "hier_shared", "dijkstra", "bidi", "ch"),
    repeats: int = 5,
    seed: int = 0,
    flat_limit: int = 1 << 21,
    ch_limit: int = 1 << 13,
    tree_limit: int = 1 << 16,
) -> Iterator[BenchRecord]:
    """Recursive family, leftmost to rightmost leaf, one instance per depth.

    Methods whose representation exceeds its size limit are skipped at that depth.
    """
    flat_methods = [m for m in methods if m in ("dijkstra", "bidi", "ch")]
    for depth in depths:
        init, goal = recursive_endpoints(depth)
        records: list[BenchRecord] = []
        if "hier_shared" in methods:
            inst = _Instance(f"recursive-d{depth}", gen_recursive(depth, shared=True), init, goal, seed, repeats)
            inst.hierarchical("hier_shared")
            records += inst.records
        if (1 << depth) - 1 <= tree_limit and ("hier" in methods or flat_methods):
            inst = _Instance(f"recursive-d{depth}", gen_recursive(depth), init, goal, seed, repeats)
            if "hier" in methods:
                inst.hierarchical("hier")
            if inst.flat_states <= flat_limit:
                chosen = [m for m in flat_methods if m != "ch" or inst.flat_states <= ch_limit]
                inst.flat(chosen)
            records += inst.records
        check_costs(records)
        yield from records


def study2(
    houses: int = 10,
    grid: tuple[int, int] = (10, 10),
    rack: tuple[int, int] = (3, 3),
    methods: Sequence[str] = ("hier", "hier_shared", "dijkstra", "bidi"),
    repeats: int = 5,
    seed: int = 0,
    ch_limit: int = 1 << 13,
) -> Iterator[BenchRecord]:
    """Warehouse cases 1-3 applied cumulatively.

    Hierarchical methods get an ``update`` row (incremental exit-table
    refresh after the case's modifications) next to the full ``preprocess``
    row. Flat methods run on the tree-mode system only.
    """
    flat_methods = [m for m in methods if m in ("dijkstra", "bidi", "ch")]
    per_case: dict[int, list[BenchRecord]] = {1: [], 2: [], 3: []}
    for shared in (False, True):
        method = "hier_shared" if shared else "hier"
        flat_here = flat_methods if not shared else []
        if method not in methods and not flat_here:
            continue
        w = gen_warehouse(houses, grid, rack, shared=shared)
        live = LiveSystem(w.z)
        live.update()
        init = w.start_state()
        for case in (1, 2, 3):
            mods, attached = case_modifications(w, case)
            start = time.perf_counter()
            for mod in mods:
                live.modify(mod, attached=attached)
                live.update()
            update_ms = (time.perf_counter() - start) * 1000.0
            inst = _Instance(f"warehouse-case{case}", w.z, init, case_goal(w, case), seed, repeats)
            if method in methods:
                if mods:
                    inst.record(method, "update", update_ms, None)
                inst.hierarchical(method)
                incremental = plan(w.z, live.table, inst.init, inst.goal, expand_inputs=False).cost
                if incremental != inst.records[-1].cost:
                    raise CostMismatch(f"case {case}: incremental table gives {incremental}, fresh gives {inst.records[-1].cost}")
            if flat_here:
                inst.flat([m for m in flat_here if m != "ch" or inst.flat_states <= ch_limit])
            per_case[case] += inst.records
            yield from inst.records
    for records in per_case.values():
        check_costs(records)


def case_goal(w: Warehouse, case: int) -> Path:
    """Last tube scanned in the last house, the added house, or the second house."""
    return w.goal_state({1: w.houses - 1, 2: w.houses, 3: min(1, w.houses - 1)}[case])


def case_modifications(w: Warehouse, case: int) -> tuple[list, Optional[ExitCostTable]]:
    """Modifications that turn the previous case into ``case``, plus entries for any attached subtree."""
    if case == 2:
        if w.z.mode == "tree":
            attach = house_subtree(w.grid, w.rack, f"house{w.houses + 1}")
            return w.add_house_mods(attach), fresh_table(attach)[0]
        return w.add_house_mods(), None
    if case == 3:
        return w.block_mods(min(1, w.houses - 1)), None
    return [], None


def write_csv(records: Iterable[BenchRecord], path) -> int:
    count = 0
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for rec in records:
            row = asdict(rec)
            row["cost"] = "" if row["cost"] is None else row["cost"]
            writer.writerow(row)
            count += 1
    return count


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
