"""System generators: a small worked fixture, random hierarchies, the recursive
scaling family and the robot warehouse."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .hierarchy import SHARED, TREE, BudgetExceeded, Himm, Path
from .machines import Alphabet, MealyMachine
from .modifications import AddState, ArcModification, SubtractState


def _machine(alphabet: Alphabet, names: list[str], arcs: list[tuple[str, str, str, float]], start: str) -> MealyMachine:
    ids = {name: i for i, name in enumerate(names)}
    table: dict[int, dict[int, tuple[int, float]]] = {}
    for src, a, dst, cost in arcs:
        table.setdefault(ids[src], {})[alphabet.index(a)] = (ids[dst], cost)
    return MealyMachine(tuple(range(len(names))), alphabet, table, ids[start], dict(enumerate(names)))


def example_system() -> Himm:
    """Four nested machines A > {B > D, C} over six leaves named 1..6.

    Leaf 5 climbs to A on ``a`` and lands on leaf 4 through B and D; leaf 4
    climbs to B on ``b`` and lands on leaf 3.
    """
    sigma = Alphabet.of("a", "b", "c")
    z = Himm(sigma, TREE)
    a = z.add_machine(
        _machine(sigma, ["1", "B", "C"], [("1", "a", "B", 2), ("C", "a", "B", 3), ("B", "c", "C", 1), ("C", "b", "1", 1)], "1"),
        "A",
    )
    b = z.add_machine(_machine(sigma, ["D", "3"], [("D", "b", "3", 2), ("3", "a", "D", 1)], "D"), "B")
    c = z.add_machine(_machine(sigma, ["5", "6"], [("5", "b", "6", 1), ("6", "c", "5", 2)], "5"), "C")
    d = z.add_machine(_machine(sigma, ["4", "2"], [("4", "c", "2", 1), ("2", "c", "4", 1), ("2", "a", "4", 4)], "4"), "D")
    z.set_child(a, 1, b)
    z.set_child(a, 2, c)
    z.set_child(b, 0, d)
    return z


# random hierarchies ---------------------------------------------------------


def random_machine(
    rng: random.Random,
    alphabet: Alphabet,
    num_states: int,
    max_cost: int = 9,
    density: float = 0.35,
    reachable: bool = True,
) -> MealyMachine:
    k = len(alphabet)
    arcs: dict[int, dict[int, tuple[int, float]]] = {q: {} for q in range(num_states)}
    if reachable:
        for q in range(1, num_states):
            for _ in range(20):
                parent = rng.randrange(q)
                free = [a for a in range(k) if a not in arcs[parent]]
                if free:
                    arcs[parent][rng.choice(free)] = (q, rng.randint(0, max_cost))
                    break
            else:
                # every earlier state is saturated; reroute one arc
                parent = rng.randrange(q)
                arcs[parent][rng.randrange(k)] = (q, rng.randint(0, max_cost))
    for q in range(num_states):
        for a in range(k):
            if a not in arcs[q] and rng.random() < density:
                arcs[q][a] = (rng.randrange(num_states), rng.randint(0, max_cost))
    machine = MealyMachine(tuple(range(num_states)), alphabet, arcs, 0)
    if reachable:
        from .machines import reachable_states

        if len(reachable_states(machine)) != num_states:
            return random_machine(rng, alphabet, num_states, max_cost, density, reachable)
    return machine


def random_himm(
    rng: random.Random,
    max_depth: int = 4,
    max_states: int = 6,
    max_inputs: int = 4,
    max_cost: int = 9,
    child_prob: float = 0.3,
    max_machines: int = 30,
    density: float = 0.35,
    share_prob: float = 0.0,
) -> Himm:
    """Random hierarchy with every state reachable inside its machine.

    With ``share_prob > 0`` the result is in shared mode and a new nesting
    reuses an existing non-ancestor machine with that probability.
    """
    k = rng.randint(1, max_inputs)
    sigma = Alphabet(tuple("abcdefghijklmnopqrstuvwxyz"[:k]))
    z = Himm(sigma, SHARED if share_prob > 0 else TREE)
    root = z.add_machine(random_machine(rng, sigma, rng.randint(1, max_states), max_cost, density))
    queue = [(root, 1)]
    while queue:
        mid, depth = queue.pop(0)
        if depth >= max_depth:
            continue
        for q in z.machines[mid].states:
            if len(z.machines) >= max_machines:
                break
            if rng.random() < child_prob:
                if share_prob > 0 and rng.random() < share_prob:
                    above = z.ancestors(mid)
                    pool = sorted(m for m in z.machines if m not in above)
                    if pool:
                        z.set_child(mid, q, rng.choice(pool))
                        continue
                kid = z.add_machine(random_machine(rng, sigma, rng.randint(1, max_states), max_cost, density))
                z.set_child(mid, q, kid)
                queue.append((kid, depth + 1))
    return z


# recursive scaling family ----------------------------------------------------


def default_base() -> MealyMachine:
    """Three states in a row, entered in the middle; the two ends get expanded."""
    sigma = Alphabet.of("left", "right")
    return _machine(
        sigma,
        ["0", "1", "2"],
        [("0", "right", "1", 1), ("1", "right", "2", 1), ("1", "left", "0", 1), ("2", "left", "1", 1)],
        "1",
    )


def gen_recursive(
    depth: int,
    base: Optional[MealyMachine] = None,
    expand_states: tuple[int, int] = (0, 2),
    shared: bool = False,
    max_machines: int = 1 << 21,
) -> Himm:
    """Nest copies of ``base`` at ``expand_states`` of every deepest machine, ``depth`` levels deep."""
    if depth < 1:
        raise ValueError("depth must be positive")
    base = default_base() if base is None else base
    for q in expand_states:
        if q not in base:
            raise ValueError(f"expansion state {q} not in the base machine")
    if shared:
        z = Himm(base.alphabet, SHARED)
        above = z.add_machine(base, "level1")
        for level in range(2, depth + 1):
            mid = z.add_machine(base, f"level{level}")
            for q in expand_states:
                z.set_child(above, q, mid)
            above = mid
        return z
    if (1 << depth) - 1 > max_machines:
        raise BudgetExceeded(f"tree of depth {depth} needs {(1 << depth) - 1} machines")
    z = Himm(base.alphabet, TREE)
    frontier = [z.add_machine(base, "level1")]
    for level in range(2, depth + 1):
        nxt = []
        for mid in frontier:
            for q in expand_states:
                kid = z.add_machine(base, f"level{level}")
                z.set_child(mid, q, kid)
                nxt.append(kid)
        frontier = nxt
    return z


def recursive_endpoints(depth: int, expand_states: tuple[int, int] = (0, 2)) -> tuple[Path, Path]:
    """Leftmost and rightmost leaves of the recursive family."""
    left, right = expand_states
    return (left,) * depth, (right,) * depth


def recursive_leaf_count(depth: int, base_states: int = 3, expanded: int = 2) -> int:
    """Closed form: each non-deepest machine keeps ``base_states - expanded`` leaves."""
    machines_above = sum(expanded**i for i in range(depth - 1))
    return machines_above * (base_states - expanded) + expanded ** (depth - 1) * base_states


# warehouse -----------------------------------------------------------------

WAREHOUSE_INPUTS = ("left", "right", "up", "down", "desk", "quit", "scan")
MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


@dataclass
class Warehouse:
    z: Himm
    houses: int
    grid: tuple[int, int]
    rack: tuple[int, int]
    city: int
    house_ids: list[int] = field(default_factory=list)

    def cell(self, row: int, col: int) -> int:
        return 1 + row * self.grid[1] + col

    def arm(self, position: int, scanned: Optional[int]) -> int:
        slots = self.rack[0] * self.rack[1]
        return 1 + position * (slots + 1) + (slots if scanned is None else scanned)

    @property
    def corner_tube(self) -> int:
        return self.rack[0] * self.rack[1] - 1

    def start_state(self) -> Path:
        """Arm over the last tube at the bottom-right location of the first house, nothing scanned."""
        rows, cols = self.grid
        return (0, self.cell(rows - 1, cols - 1), self.arm(self.corner_tube, None))

    def goal_state(self, house: int) -> Path:
        """Last tube scanned at the bottom-right location of ``house`` (0-based)."""
        rows, cols = self.grid
        return (house, self.cell(rows - 1, cols - 1), self.arm(self.corner_tube, self.corner_tube))

    def random_leaf(self, rng: random.Random) -> Path:
        house = rng.randrange(self.houses)
        rows, cols = self.grid
        if rng.random() < 0.1:
            return (house, 0)
        location = self.cell(rng.randrange(rows), rng.randrange(cols))
        slots = self.rack[0] * self.rack[1]
        if rng.random() < 0.3:
            return (house, location, 0)
        return (house, location, self.arm(rng.randrange(slots), rng.choice([None, *range(slots)])))

    def add_house_mods(self, attach: Optional[Himm] = None):
        """Extra house at the end of the row plus the arcs joining it to its neighbour."""
        new = self.houses
        city = self.z.machines[self.city]
        arcs = {q: dict(row) for q, row in city.arcs.items()}
        left, right = self.z.alphabet.index("left"), self.z.alphabet.index("right")
        arcs.setdefault(new - 1, {})[right] = (new, 100.0)
        arcs.setdefault(new, {})[left] = (new - 1, 100.0)
        if self.z.mode == SHARED:
            add = AddState(self.city, new, child=self.house_ids[0], name=f"House {new + 1}")
        else:
            add = AddState(self.city, new, attach=attach, name=f"House {new + 1}")
        return [add, ArcModification(self.city, arcs)]

    def block_mods(self, house: int = 1) -> list[SubtractState]:
        """Wall down the middle column of ``house``, open only at the top row."""
        rows, cols = self.grid
        if rows < 2 or cols < 3:
            raise ValueError("a wall that keeps the corner reachable needs at least 2 rows and 3 columns")
        col = cols // 2
        target = self.house_ids[house] if self.z.mode == TREE else (house,)
        return [SubtractState(target, self.cell(r, col)) for r in range(1, rows)]


def location_machine(rack: tuple[int, int] = (3, 3)) -> MealyMachine:
    sigma = Alphabet(WAREHOUSE_INPUTS)
    rr, rc = rack
    slots = rr * rc
    names = ["S"]
    ids = {}
    for p in range(slots):
        for s in range(slots + 1):
            ids[(p, s)] = len(names)
            names.append(f"arm{p // rc + 1},{p % rc + 1}/" + ("none" if s == slots else f"{s // rc + 1},{s % rc + 1}"))
    idx = sigma.index
    arcs: dict[int, dict[int, tuple[int, float]]] = {0: {idx("desk"): (ids[(0, slots)], 0.5)}}
    for (p, s), q in ids.items():
        row = {}
        r, c = divmod(p, rc)
        for move, (dr, dc) in MOVES.items():
            nr, nc = r + dr, c + dc
            target = ids[(nr * rc + nc, s)] if 0 <= nr < rr and 0 <= nc < rc else q
            row[idx(move)] = (target, 0.5)
        if s == slots:
            row[idx("scan")] = (ids[(p, p)], 4.0)
        if p == 0:
            row[idx("quit")] = (0, 0.5)
        arcs[q] = row
    return MealyMachine(tuple(range(len(names))), sigma, arcs, 0, dict(enumerate(names)))


def house_machine(grid: tuple[int, int] = (10, 10)) -> MealyMachine:
    sigma = Alphabet(WAREHOUSE_INPUTS)
    rows, cols = grid
    idx = sigma.index

    def cell(r, c):
        return 1 + r * cols + c

    door = cell(rows - 1, 0)
    names = ["S"] + [f"loc{r + 1},{c + 1}" for r in range(rows) for c in range(cols)]
    arcs: dict[int, dict[int, tuple[int, float]]] = {0: {idx("up"): (door, 1.0)}}
    for r in range(rows):
        for c in range(cols):
            row = {}
            for move, (dr, dc) in MOVES.items():
                nr, nc = r + dr, c + dc
                if 0 <= nr < rows and 0 <= nc < cols:
                    row[idx(move)] = (cell(nr, nc), 1.0)
                elif move == "down" and cell(r, c) == door:
                    row[idx(move)] = (0, 1.0)
                else:
                    row[idx(move)] = (cell(r, c), 1.0)
            arcs[cell(r, c)] = row
    return MealyMachine(tuple(range(len(names))), sigma, arcs, 0, dict(enumerate(names)))


def city_machine(houses: int = 10) -> MealyMachine:
    sigma = Alphabet(WAREHOUSE_INPUTS)
    left, right = sigma.index("left"), sigma.index("right")
    arcs: dict[int, dict[int, tuple[int, float]]] = {}
    for h in range(houses):
        row = {}
        if h + 1 < houses:
            row[right] = (h + 1, 100.0)
        if h > 0:
            row[left] = (h - 1, 100.0)
        arcs[h] = row
    return MealyMachine(tuple(range(houses)), sigma, arcs, 0, {h: f"House {h + 1}" for h in range(houses)})


def house_subtree(grid: tuple[int, int] = (10, 10), rack: tuple[int, int] = (3, 3), label: str = "house") -> Himm:
    """One house with its own location machines, as a standalone tree."""
    house = house_machine(grid)
    location = location_machine(rack)
    z = Himm(house.alphabet, TREE)
    top = z.add_machine(house, label)
    for q in house.states[1:]:
        z.set_child(top, q, z.add_machine(location, f"{label}/{house.name_of(q)}"))
    return z


def gen_warehouse(
    houses: int = 10,
    grid: tuple[int, int] = (10, 10),
    rack: tuple[int, int] = (3, 3),
    shared: bool = False,
) -> Warehouse:
    if min(houses, *grid, *rack) < 1:
        raise ValueError("all counts must be at least 1")
    city = city_machine(houses)
    house = house_machine(grid)
    location = location_machine(rack)
    z = Himm(city.alphabet, SHARED if shared else TREE)
    root = z.add_machine(city, "city")
    house_ids = []
    if shared:
        hid = z.add_machine(house, "house")
        lid = z.add_machine(location, "location")
        for q in house.states[1:]:
            z.set_child(hid, q, lid)
        for h in range(houses):
            z.set_child(root, h, hid)
        house_ids = [hid] * houses
    else:
        for h in range(houses):
            hid = z.add_machine(house, f"house{h + 1}")
            z.set_child(root, h, hid)
            house_ids.append(hid)
            for q in house.states[1:]:
                z.set_child(hid, q, z.add_machine(location, f"house{h + 1}/{house.name_of(q)}"))
    return Warehouse(z, houses, grid, rack, root, house_ids)
