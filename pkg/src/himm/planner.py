"""Query pipeline: nesting chains, reduction, solving and plan expansion.

Only the machines on the two nesting chains (from the initial and the goal
leaf up to the root) are searched. Every other subtree hanging off those
chains is priced by its precomputed exit costs and, once a route is found,
unfolded again from the stored witness trajectories.

Positions in the reduced system are paths, exactly like leaves of the full
system; a reduced state is either a leaf of the full system or the path of a
truncated state whose subtree was replaced by exit costs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

from .exits import DirtyTable, ExitCostTable
from .hierarchy import Himm, Path, run_himm_plan
from .machines import MealyMachine, StructuralError
from .search import bidirectional, shortest_paths

INF = math.inf


class TableCorruption(RuntimeError):
    pass


class Step(NamedTuple):
    """One pair of a reduced trajectory; ``child`` is set for truncated states."""

    path: Path
    input: int
    child: Optional[int]


# chains -------------------------------------------------------------------


@dataclass(frozen=True)
class NestingChains:
    init: Path
    goal: Path
    up: tuple[int, ...]  # machines holding init, from its own machine to the root
    down: tuple[int, ...]  # same for goal
    init_levels: int  # machines on the init side strictly below the merge machine
    goal_levels: int  # same on the goal side

    @property
    def common(self) -> int:
        """Length of the shared path prefix of the two endpoints."""
        return len(self.init) - self.init_levels - 1


def compute_paths(z: Himm, init: Sequence[int], goal: Sequence[int]) -> NestingChains:
    init, goal = tuple(init), tuple(goal)
    for leaf in (init, goal):
        if not z.is_leaf(leaf):
            raise StructuralError(f"{leaf} is not a leaf state")
    up = tuple(reversed(z.chain(init)))
    down = tuple(reversed(z.chain(goal)))
    if init == goal:
        return NestingChains(init, goal, up, down, 0, 0)
    common = 0
    for x, y in zip(init, goal):
        if x != y:
            break
        common += 1
    return NestingChains(init, goal, up, down, len(init) - common - 1, len(goal) - common - 1)


# reduction ----------------------------------------------------------------


@dataclass
class ReducedMachine:
    """A chain machine whose arc costs fold in the exit costs of truncated states."""

    mid: int
    machine: MealyMachine
    prefix: Path
    onchain: frozenset[int]
    kids: dict[int, int]
    table: ExitCostTable

    def truncated(self, q: int) -> Optional[int]:
        kid = self.kids.get(q)
        if kid is None or q in self.onchain:
            return None
        return kid

    def reduced_cost(self, q: int, a: int) -> float:
        kid = self.truncated(q)
        if kid is None:
            extra = 0.0
        else:
            costs = self.table.cost.get(kid)
            if costs is None:
                raise DirtyTable(f"no exit costs for machine {kid}")
            extra = costs[a]
        hit = self.machine.arcs.get(q, {}).get(a)
        return extra if hit is None else hit[1] + extra

    def step(self, q: int, a: int) -> Step:
        return Step(self.prefix + (q,), a, self.truncated(q))


@dataclass
class ReducedHimm:
    z: Himm
    table: ExitCostTable
    chains: NestingChains
    up: list[ReducedMachine]  # index i-1 holds level i
    down: list[ReducedMachine]  # goal-side levels 1..goal_levels
    prefixes: frozenset[Path] = field(default_factory=frozenset)
    by_prefix: dict[Path, ReducedMachine] = field(default_factory=dict)

    @property
    def machine_count(self) -> int:
        return len(self.up) + len(self.down)

    def is_state(self, path: Path) -> bool:
        return path[:-1] in self.prefixes and path not in self.prefixes

    def state_of(self, leaf: Path) -> Path:
        """Reduced state containing ``leaf``."""
        for j in range(len(leaf) - 1, -1, -1):
            if leaf[:j] in self.prefixes:
                return leaf[: j + 1]
        raise StructuralError(f"{leaf} is outside the reduced system")

    def _enter(self, path: Path) -> Path:
        while path in self.prefixes:
            path = path + (self.by_prefix[path].machine.start,)
        return path

    def step(self, path: Sequence[int], a: int) -> Optional[tuple[Path, float]]:
        """Reduced transition and cumulative reduced cost (climbing like the full system)."""
        path = tuple(path)
        if not self.is_state(path):
            raise StructuralError(f"{path} is not a reduced state")
        total = 0.0
        for j in range(len(path) - 1, -1, -1):
            rm = self.by_prefix[path[:j]]
            q = path[j]
            cost = rm.reduced_cost(q, a)
            if cost == INF:
                return None
            total += cost
            hit = rm.machine.arcs.get(q, {}).get(a)
            if hit is not None:
                return self._enter(path[:j] + (hit[0],)), total
        return None

    def cost(self, trajectory: Sequence[tuple]) -> float:
        """Cumulative reduced cost of a trajectory, or inf if it is not feasible."""
        total = 0.0
        position = None
        for step in trajectory:
            path, a = tuple(step[0]), step[1]
            if position is not None and position != path:
                return INF
            hit = self.step(path, a)
            if hit is None:
                return INF
            position, c = hit
            total += c
        return total


def reduce(z: Himm, chains: NestingChains, table: ExitCostTable, marks: Optional[set] = None) -> ReducedHimm:
    if marks:
        raise DirtyTable(f"{len(marks)} machines still marked")
    init, goal = chains.init, chains.goal
    d, m = len(init), len(goal)
    common = chains.common
    n = len(chains.up)

    def build(mid: int, prefix: Path, onchain: set[int]) -> ReducedMachine:
        return ReducedMachine(mid, z.machines[mid], prefix, frozenset(onchain), z.children[mid], table)

    up = []
    for i in range(1, n + 1):
        onchain = {init[d - i]} if i >= 2 else set()
        if i == chains.init_levels + 1 and chains.goal_levels >= 1:
            onchain.add(goal[common])
        up.append(build(chains.up[i - 1], init[: d - i], onchain))
    down = []
    for i in range(1, chains.goal_levels + 1):
        onchain = {goal[m - i]} if i >= 2 else set()
        down.append(build(chains.down[i - 1], goal[: m - i], onchain))
    prefixes = frozenset(init[:j] for j in range(d)) | frozenset(goal[:j] for j in range(m))
    by_prefix = {rm.prefix: rm for rm in up + down}
    return ReducedHimm(z, table, chains, up, down, prefixes, by_prefix)


# solving ------------------------------------------------------------------

_STATE, _EXIT = 0, 1


@dataclass
class SolveGraph:
    arcs: dict[tuple[int, int], list]
    source: tuple[int, int]
    target: tuple[int, int]
    searches: int = 0

    @property
    def node_count(self) -> int:
        nodes = set(self.arcs)
        for out in self.arcs.values():
            nodes.update(v for v, _, _ in out)
        return len(nodes)


def _local_search(rm: ReducedMachine, source: int, terminals: set[int], exits_allowed: bool, k: int):
    def forward(node):
        q = node[1]
        row = rm.machine.arcs.get(q, {})
        for a in range(k):
            cost = rm.reduced_cost(q, a)
            if cost == INF:
                continue
            hit = row.get(a)
            if hit is not None:
                yield (_STATE, hit[0]), cost, a
            elif exits_allowed:
                yield (_EXIT, a), cost, a

    start = (_STATE, source)
    targets = {(_STATE, t) for t in terminals}
    if exits_allowed:
        targets |= {(_EXIT, a) for a in range(k)}
    settled, pred = shortest_paths(
        forward, start, targets, expand=lambda node: node[0] == _STATE and node[1] not in terminals
    )
    return settled, pred


def _local_steps(rm: ReducedMachine, pred: dict, source: int, node) -> list[Step]:
    steps = []
    while node != (_STATE, source):
        prev, a = pred[node]
        steps.append(rm.step(prev[1], a))
        node = prev
    steps.reverse()
    return steps


def build_solve_graph(r: ReducedHimm) -> SolveGraph:
    """Graph over entry points of the initial-side chain, ending at the goal-side entry."""
    chains = r.chains
    init = chains.init
    d = len(init)
    n = len(r.up)
    k = len(r.z.alphabet)
    merge_level = chains.init_levels + 1
    goal_state = chains.goal[chains.common]
    goal_node = (n + 1, -1)

    def below(i: int) -> Optional[int]:
        return init[d - i] if i >= 2 else None

    # where entering level i lands
    go_in = {0: (1, init[d - 1])}
    for i in range(1, n):
        start = r.up[i - 1].machine.start
        go_in[i] = go_in[i - 1] if start == below(i) or (i == 1 and start == init[d - 1]) else (i, start)

    # where exiting level i with each input lands, and the cost charged where it fires
    exit_to: dict[int, list] = {}
    carry: list = [None] * k
    for i in range(n - 1, 0, -1):
        upper = r.up[i]
        row = upper.machine.arcs.get(below(i + 1), {})
        for a in range(k):
            hit = row.get(a)
            if hit is not None:
                carry[a] = ((i + 1, hit[0]), hit[1])
        exit_to[i] = list(carry)

    arcs: dict[tuple[int, int], list] = {}
    graph = SolveGraph(arcs, go_in[0], goal_node)
    for i in range(1, n + 1):
        rm = r.up[i - 1]
        sources = []
        if i == 1:
            sources.append(init[d - 1])
        start = rm.machine.start
        if start != below(i):
            sources.append(start)
        if i >= 2:
            for a in range(k):
                hit = rm.machine.arcs.get(below(i), {}).get(a)
                if hit is not None:
                    sources.append(hit[0])
        terminals = set()
        if i >= 2:
            terminals.add(below(i))
        if i == merge_level:
            terminals.add(goal_state)
        for s in dict.fromkeys(sources):
            node = (i, s)
            if node in arcs:
                continue
            out = arcs[node] = []
            settled, pred = _local_search(rm, s, terminals, i < n, k)
            graph.searches += 1
            if i >= 2 and (_STATE, below(i)) in settled:
                out.append((go_in[i - 1], settled[(_STATE, below(i))], _local_steps(rm, pred, s, (_STATE, below(i)))))
            if i == merge_level and (_STATE, goal_state) in settled:
                out.append((goal_node, settled[(_STATE, goal_state)], _local_steps(rm, pred, s, (_STATE, goal_state))))
            if i < n:
                for a in range(k):
                    sink = (_EXIT, a)
                    if sink in settled and exit_to[i][a] is not None:
                        target, fire = exit_to[i][a]
                        out.append((target, settled[sink] + fire, _local_steps(rm, pred, s, sink)))
    return graph


def _descend_goal_side(r: ReducedHimm) -> Optional[tuple[list[Step], float]]:
    """Optimal route from the entry of the goal-side chain down to the goal leaf."""
    goal = r.chains.goal
    m = len(goal)

    def land(i: int) -> tuple[int, int]:
        start = r.down[i - 1].machine.start
        while i >= 2 and start == goal[m - i]:
            i -= 1
            start = r.down[i - 1].machine.start
        return i, start

    steps: list[Step] = []
    total = 0.0
    k = len(r.z.alphabet)
    i, c = land(r.chains.goal_levels)
    while True:
        target = goal[m - i]
        if c == target:
            # only possible at level 1: landed on the goal leaf itself
            return steps, total
        rm = r.down[i - 1]
        backward_index: dict[int, list] = {}
        for q, row in rm.machine.arcs.items():
            for a, (v, _) in row.items():
                backward_index.setdefault(v, []).append((q, a))

        def forward(q, rm=rm):
            if q == target:
                return
            row = rm.machine.arcs.get(q, {})
            for a in range(k):
                hit = row.get(a)
                if hit is not None:
                    cost = rm.reduced_cost(q, a)
                    if cost < INF:
                        yield hit[0], cost, a

        def backward(v, rm=rm, idx=backward_index):
            for q, a in idx.get(v, ()):
                if q == target:
                    continue
                cost = rm.reduced_cost(q, a)
                if cost < INF:
                    yield q, cost, a

        cost, nodes, labels = bidirectional(forward, backward, c, target)
        if cost == INF:
            return None
        steps.extend(rm.step(q, a) for q, a in zip(nodes, labels))
        total += cost
        if i == 1:
            return steps, total
        i, c = land(i - 1)


@dataclass
class Solution:
    steps: list[Step]
    cost: float
    seam: int  # number of steps before the goal-side chain is entered
    graph: Optional[SolveGraph] = None


def solve(r: ReducedHimm) -> Optional[Solution]:
    """Optimal reduced trajectory, or ``None`` when the goal is unreachable."""
    chains = r.chains
    if chains.init == chains.goal:
        return Solution([], 0.0, 0)
    graph = build_solve_graph(r)
    back: dict = {}
    for u, out in graph.arcs.items():
        for v, c, label in out:
            back.setdefault(v, []).append((u, c, label))
    cost, _, labels = bidirectional(
        lambda u: graph.arcs.get(u, ()), lambda v: back.get(v, ()), graph.source, graph.target
    )
    if cost == INF:
        return None
    steps = [s for label in labels for s in label]
    seam = len(steps)
    if chains.goal_levels >= 1:
        rest = _descend_goal_side(r)
        if rest is None:
            return None
        steps.extend(rest[0])
        cost += rest[1]
    return Solution(steps, cost, seam, graph)


# expansion ----------------------------------------------------------------


class PlanStream:
    """Yields plan inputs one at a time using an explicit stack of witness frames."""

    def __init__(self, z: Himm, table: ExitCostTable, steps: Sequence[Step]):
        self._z = z
        self._table = table
        self._frames: list[list] = [[steps, 0, None]]
        self.emitted = 0
        self.max_stack = 1

    def __iter__(self) -> Iterator[int]:
        return self

    def __next__(self) -> int:
        frames = self._frames
        children = self._z.children
        while frames:
            frame = frames[-1]
            seq, pos, mid = frame
            if pos == len(seq):
                frames.pop()
                continue
            frame[1] = pos + 1
            if mid is None:
                _, a, kid = seq[pos]
            else:
                q, a = seq[pos]
                kid = children[mid].get(q)
            if kid is None:
                self.emitted += 1
                return a
            witness = self._witness(kid, a)
            frames.append([witness, 0, kid])
            if len(frames) > self.max_stack:
                self.max_stack = len(frames)
        raise StopIteration

    def _witness(self, mid: int, a: int):
        try:
            witness = self._table.witness[mid][a]
        except KeyError:
            raise TableCorruption(f"no witnesses stored for machine {mid}") from None
        if witness is None:
            raise TableCorruption(f"machine {mid} has no exit witness for input {a}")
        return witness


def expand(z: Himm, table: ExitCostTable, steps: Sequence[Step]) -> list[int]:
    return list(PlanStream(z, table, steps))


def optimal_expansion(z: Himm, table: ExitCostTable, steps: Sequence[Step]) -> list[tuple[Path, int]]:
    """Leaf-level trajectory obtained by unfolding every truncated state."""
    out = []
    frames: list[list] = [[[(s.path, s.input, s.child) for s in steps], 0]]
    while frames:
        frame = frames[-1]
        seq, pos = frame
        if pos == len(seq):
            frames.pop()
            continue
        frame[1] = pos + 1
        path, a, kid = seq[pos]
        if kid is None:
            out.append((path, a))
            continue
        witness = table.witness.get(kid, (None,) * (a + 1))[a]
        if witness is None:
            raise TableCorruption(f"machine {kid} has no exit witness for input {a}")
        kids = z.children[kid]
        frames.append([[(path + (q,), b, kids.get(q)) for q, b in witness], 0])
    return out


def reduced_trajectory(r: ReducedHimm, trajectory: Sequence[tuple[Path, int]]) -> Optional[list[Step]]:
    """Collapse excursions into truncated subtrees into single reduced pairs.

    Returns ``None`` when the trajectory enters a truncated subtree and never
    leaves it.
    """
    z = r.z
    out: list[Step] = []
    i = 0
    n = len(trajectory)
    while i < n:
        leaf, a = tuple(trajectory[i][0]), trajectory[i][1]
        p = r.state_of(leaf)
        rm = r.by_prefix[p[:-1]]
        if p == leaf:
            out.append(rm.step(p[-1], a))
            i += 1
            continue
        depth = len(p)
        while i < n:
            leaf, a = tuple(trajectory[i][0]), trajectory[i][1]
            hit = _full_step(z, leaf, a)
            i += 1
            if hit is None or hit[:depth] != p:
                out.append(rm.step(p[-1], a))
                break
        else:
            return None
    return out


def _full_step(z: Himm, leaf: Path, a: int) -> Optional[Path]:
    from .hierarchy import hier_step

    hit = hier_step(z, leaf, a)
    return None if hit is None else hit[0]


# entry point --------------------------------------------------------------


@dataclass
class PlanResult:
    init: Path
    goal: Path
    cost: float
    inputs: Optional[list[int]]
    steps: Optional[list[Step]]
    reduced_machines: int = 0
    solve_searches: int = 0

    @property
    def feasible(self) -> bool:
        return self.cost < INF

    def trajectory(self, z: Himm, table: ExitCostTable) -> list[tuple[Path, int]]:
        if self.steps is None:
            return []
        return optimal_expansion(z, table, self.steps)


def plan(
    z: Himm,
    table: ExitCostTable,
    init: Sequence[int],
    goal: Sequence[int],
    marks: Optional[set] = None,
    verify: bool = False,
    expand_inputs: bool = True,
) -> PlanResult:
    """Optimal plan from leaf ``init`` to leaf ``goal``.

    An infeasible query returns a result with infinite cost and no inputs.
    With ``verify`` the plan is replayed on the full system.
    """
    chains = compute_paths(z, init, goal)
    r = reduce(z, chains, table, marks)
    solution = solve(r)
    if solution is None:
        return PlanResult(chains.init, chains.goal, INF, None, None, r.machine_count)
    inputs = expand(z, table, solution.steps) if expand_inputs else None
    result = PlanResult(
        chains.init,
        chains.goal,
        solution.cost,
        inputs,
        solution.steps,
        r.machine_count,
        solution.graph.searches if solution.graph else 0,
    )
    if verify:
        replay = run_himm_plan(z, chains.init, inputs if inputs is not None else expand(z, table, solution.steps))
        if replay is None or replay[2] != chains.goal or not math.isclose(replay[1], solution.cost, rel_tol=1e-9, abs_tol=1e-9):
            raise AssertionError(f"plan replay mismatch: {replay and replay[1:]} vs cost {solution.cost}")
    return result
