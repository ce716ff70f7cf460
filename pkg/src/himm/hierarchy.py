"""Hierarchical Mealy machines in tree or shared (DAG) form.

Every hierarchical state is addressed by a path: the tuple of local state
indices chosen from the root machine downwards. Tree mode is the special case
where each machine has a single parent arc, so a leaf also has a unique
``(machine, state)`` address; :meth:`Himm.path_of` converts between the two.
"""

from __future__ import annotations

import graphlib
import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

from .machines import Alphabet, MealyMachine, StructuralError, is_module

Path = tuple[int, ...]

TREE = "tree"
SHARED = "shared"

_machine_ids = itertools.count(1)


def fresh_machine_id() -> int:
    """Machine ids are unique per process so tables from different systems can merge."""
    return next(_machine_ids)


class BudgetExceeded(RuntimeError):
    pass


class Himm:
    """Machines plus nesting arcs ``(machine, state) -> child machine``."""

    def __init__(self, alphabet: Alphabet, mode: str = TREE):
        if mode not in (TREE, SHARED):
            raise ValueError(f"mode must be {TREE!r} or {SHARED!r}")
        self.alphabet = alphabet
        self.mode = mode
        self.machines: dict[int, MealyMachine] = {}
        self.children: dict[int, dict[int, int]] = {}
        self.parent_arcs: dict[int, set[tuple[int, int]]] = {}
        self.names: dict[int, str] = {}
        self.root: Optional[int] = None

    # construction -------------------------------------------------------

    def add_machine(self, machine: MealyMachine, name: Optional[str] = None, mid: Optional[int] = None) -> int:
        if machine.alphabet != self.alphabet:
            raise StructuralError("machine alphabet differs from the hierarchy alphabet")
        mid = fresh_machine_id() if mid is None else mid
        if mid in self.machines:
            raise StructuralError(f"machine id {mid} already present")
        self.machines[mid] = machine
        self.children[mid] = {}
        self.parent_arcs.setdefault(mid, set())
        self.names[mid] = name if name is not None else f"M{mid}"
        if self.root is None:
            self.root = mid
        return mid

    def set_child(self, mid: int, state: int, child: int) -> None:
        if state not in self.machines[mid]:
            raise StructuralError(f"state {state} not in machine {self.names[mid]}")
        if child not in self.machines:
            raise StructuralError(f"child machine {child} unknown")
        self.clear_child(mid, state)
        self.children[mid][state] = child
        self.parent_arcs.setdefault(child, set()).add((mid, state))

    def clear_child(self, mid: int, state: int) -> Optional[int]:
        old = self.children[mid].pop(state, None)
        if old is not None:
            self.parent_arcs[old].discard((mid, state))
        return old

    def replace_machine(self, mid: int, machine: MealyMachine) -> None:
        """Swap in a new machine for ``mid``; nesting arcs on removed states are dropped."""
        if machine.alphabet != self.alphabet:
            raise StructuralError("machine alphabet differs from the hierarchy alphabet")
        for state in [q for q in self.children[mid] if q not in machine]:
            self.clear_child(mid, state)
        self.machines[mid] = machine

    def remove_machine(self, mid: int) -> None:
        for state in list(self.children[mid]):
            self.clear_child(mid, state)
        for parent, state in list(self.parent_arcs.get(mid, ())):
            self.clear_child(parent, state)
        del self.machines[mid], self.children[mid], self.names[mid]
        self.parent_arcs.pop(mid, None)

    def subsystem(self, mid: int) -> "Himm":
        """A read-only view of the hierarchy rooted at ``mid`` (shares storage)."""
        view = Himm.__new__(Himm)
        view.__dict__.update(self.__dict__)
        view.root = mid
        return view

    # queries ------------------------------------------------------------

    def child(self, mid: int, state: int) -> Optional[int]:
        return self.children[mid].get(state)

    def parents(self, mid: int) -> set[tuple[int, int]]:
        return self.parent_arcs.get(mid, set())

    def reachable_machines(self, top: Optional[int] = None) -> list[int]:
        """Machines reachable from ``top`` (default root), in DFS preorder."""
        top = self.root if top is None else top
        seen = {top}
        order = [top]
        stack = [top]
        while stack:
            mid = stack.pop()
            for state in sorted(self.children[mid], reverse=True):
                kid = self.children[mid][state]
                if kid not in seen:
                    seen.add(kid)
                    order.append(kid)
                    stack.append(kid)
        return order

    def ancestors(self, mid: int) -> set[int]:
        """All machines from which ``mid`` is reachable through nesting arcs, plus ``mid``."""
        seen = {mid}
        stack = [mid]
        while stack:
            for parent, _ in self.parents(stack.pop()):
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        return seen

    def bottom_up(self) -> list[int]:
        """Reachable machines ordered so every child precedes its parents."""
        graph = {mid: set(self.children[mid].values()) for mid in self.reachable_machines()}
        return list(graphlib.TopologicalSorter(graph).static_order())

    def depth(self) -> int:
        """Length of the longest root-to-machine chain (a lone root has depth 1)."""
        memo: dict[int, int] = {}
        for mid in self.bottom_up():
            kids = self.children[mid].values()
            memo[mid] = 1 + max((memo[k] for k in kids), default=0)
        return memo[self.root]

    def collect_garbage(self) -> set[int]:
        """Drop machines no longer reachable from the root; return their ids."""
        live = set(self.reachable_machines())
        dead = set(self.machines) - live
        for mid in dead:
            for state in list(self.children[mid]):
                self.clear_child(mid, state)
        for mid in dead:
            del self.machines[mid], self.children[mid], self.names[mid]
            self.parent_arcs.pop(mid, None)
        return dead

    def chain(self, path: Sequence[int]) -> list[int]:
        """Machines owning each element of ``path``: ``chain[i]`` holds ``path[i]``."""
        mids = []
        mid: Optional[int] = self.root
        for depth, state in enumerate(path):
            if mid is None:
                raise StructuralError(f"path {tuple(path)} descends below a leaf at position {depth}")
            if state not in self.machines[mid]:
                raise StructuralError(f"state {state} not in machine {self.names[mid]}")
            mids.append(mid)
            mid = self.children[mid].get(state)
        return mids

    def machine_at(self, prefix: Sequence[int]) -> int:
        """Machine reached by following ``prefix`` from the root."""
        if not prefix:
            return self.root
        last = self.chain(prefix)[-1]
        kid = self.children[last].get(prefix[-1])
        if kid is None:
            raise StructuralError(f"path {tuple(prefix)} ends at a leaf, not a machine")
        return kid

    def is_leaf(self, path: Sequence[int]) -> bool:
        mids = self.chain(path)
        return bool(path) and path[-1] not in self.children[mids[-1]]

    def descend(self, mid: int, prefix: Path) -> Path:
        """Append start states from machine ``mid`` until a leaf is reached."""
        out = list(prefix)
        current: Optional[int] = mid
        while current is not None:
            start = self.machines[current].start
            out.append(start)
            current = self.children[current].get(start)
        return tuple(out)

    def start_path(self) -> Path:
        return self.descend(self.root, ())

    def path_to_machine(self, mid: int) -> Path:
        """Prefix leading to ``mid`` (tree mode; any parent chain in shared mode)."""
        steps = []
        while mid != self.root:
            arcs = self.parents(mid)
            if not arcs:
                raise StructuralError(f"machine {mid} is not attached to the root")
            if self.mode == TREE and len(arcs) > 1:
                raise StructuralError(f"machine {mid} has several parents")
            parent, state = min(arcs)
            steps.append(state)
            mid = parent
        return tuple(reversed(steps))

    def path_of(self, mid: int, state: int) -> Path:
        if state not in self.machines[mid]:
            raise StructuralError(f"state {state} not in machine {self.names[mid]}")
        return self.path_to_machine(mid) + (state,)

    def find(self, machine_name: str, state_name: str) -> Path:
        """Tree-mode path for a state addressed by display names."""
        for mid, name in self.names.items():
            if name == machine_name:
                machine = self.machines[mid]
                for q in machine.states:
                    if machine.name_of(q) == state_name:
                        return self.path_of(mid, q)
        raise StructuralError(f"no state {state_name!r} in machine {machine_name!r}")

    def leaves(self, budget: Optional[int] = None) -> Iterator[tuple[Path, list[int]]]:
        """Yield ``(leaf path, owning chain)`` in lexicographic path order."""
        count = 0
        root_mids = [self.root]
        stack = [((q,), root_mids) for q in reversed(self.machines[self.root].states)]
        while stack:
            path, mids = stack.pop()
            kid = self.children[mids[-1]].get(path[-1])
            if kid is None:
                count += 1
                if budget is not None and count > budget:
                    raise BudgetExceeded(f"more than {budget} leaf states")
                yield path, mids
            else:
                below = mids + [kid]
                stack.extend((path + (q,), below) for q in reversed(self.machines[kid].states))

    def leaf_count(self) -> int:
        """Closed-form leaf count via memoised subtree sizes (works for huge shared systems)."""
        memo: dict[int, int] = {}
        for mid in self.bottom_up():
            kids = self.children[mid]
            memo[mid] = sum(memo[kids[q]] if q in kids else 1 for q in self.machines[mid].states)
        return memo[self.root]

    def __repr__(self) -> str:
        return f"Himm(mode={self.mode}, machines={len(self.machines)}, root={self.root})"


def start_of(z: Himm, mid: Optional[int] = None, prefix: Optional[Path] = None) -> Path:
    """Leaf reached by entering machine ``mid`` (root by default).

    In shared mode the prefix reaching ``mid`` must be given, because the
    machine may occur at several places.
    """
    mid = z.root if mid is None else mid
    if prefix is None:
        if z.mode == SHARED and mid != z.root:
            raise StructuralError("shared mode needs the prefix reaching the machine")
        prefix = z.path_to_machine(mid)
    return z.descend(mid, tuple(prefix))


def _fire(z: Himm, path: Path, mids: Sequence[int], a: int) -> Optional[tuple[Path, float, int]]:
    machines = z.machines
    for level in range(len(path) - 1, -1, -1):
        hit = machines[mids[level]].arcs.get(path[level], {}).get(a)
        if hit is not None:
            target, cost = hit
            head = path[:level] + (target,)
            kid = z.children[mids[level]].get(target)
            if kid is not None:
                head = z.descend(kid, head)
            return head, cost, level
    return None


def hier_step_level(z: Himm, path: Sequence[int], a: int) -> Optional[tuple[Path, float, int]]:
    """Like :func:`hier_step` but also reports the path position where the arc fired."""
    path = tuple(path)
    if not path:
        raise StructuralError("empty path")
    if not 0 <= a < len(z.alphabet):
        raise StructuralError(f"input {a} outside alphabet")
    return _fire(z, path, z.chain(path), a)


def hier_step(z: Himm, path: Sequence[int], a: int) -> Optional[tuple[Path, float]]:
    """Hierarchical transition and its cost; ``None`` when the system stops."""
    hit = hier_step_level(z, path, a)
    return None if hit is None else hit[:2]


def run_himm_plan(
    z: Himm, q0: Sequence[int], plan: Iterable[int]
) -> Optional[tuple[list[tuple[Path, int]], float, Path]]:
    """Replay ``plan`` from leaf ``q0``: trajectory, cumulative cost and final leaf."""
    q = tuple(q0)
    if not z.is_leaf(q):
        raise StructuralError(f"{q} is not a leaf")
    trajectory = []
    total = 0.0
    for a in plan:
        hit = hier_step_level(z, q, a)
        if hit is None:
            return None
        trajectory.append((q, a))
        q, cost, _ = hit
        total += cost
    return trajectory, total, q


@dataclass
class Flattening:
    machine: MealyMachine
    leaves: list[Path]
    index: dict[Path, int]


DEFAULT_FLATTEN_BUDGET = 1 << 22


def flatten(z: Himm, budget: int = DEFAULT_FLATTEN_BUDGET) -> Flattening:
    """Equivalent single machine over all leaves; flat ids follow path order."""
    leaves = []
    chains = []
    for path, mids in z.leaves(budget):
        leaves.append(path)
        chains.append(mids)
    index = {path: i for i, path in enumerate(leaves)}
    arcs = {}
    k = len(z.alphabet)
    for i, (path, mids) in enumerate(zip(leaves, chains)):
        row = {}
        for a in range(k):
            hit = _fire(z, path, mids, a)
            if hit is not None:
                row[a] = (index[hit[0]], hit[1])
        arcs[i] = row
    start = index[z.start_path()]
    machine = MealyMachine(tuple(range(len(leaves))), z.alphabet, arcs, start)
    return Flattening(machine, leaves, index)


def leaves_within(z: Himm, augmented: Iterable[Sequence[int]], flat: Flattening) -> set[int]:
    prefixes = {tuple(p) for p in augmented}
    lengths = sorted({len(p) for p in prefixes})
    return {
        i for i, leaf in enumerate(flat.leaves)
        if any(leaf[:n] in prefixes for n in lengths)
    }


def is_himm_module(z: Himm, augmented: Iterable[Sequence[int]], budget: int = DEFAULT_FLATTEN_BUDGET) -> bool:
    flat = flatten(z, budget)
    inside = leaves_within(z, augmented, flat)
    if not inside:
        raise ValueError("no leaves nested within the given states")
    return is_module(flat.machine, inside)


def machine_states(z: Himm, mid: int, prefix: Optional[Path] = None) -> list[Path]:
    """Augmented states ``Q_M`` of a machine occurrence as paths."""
    prefix = z.path_to_machine(mid) if prefix is None else tuple(prefix)
    return [prefix + (q,) for q in z.machines[mid].states]


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


def validate(z: Himm, reachability: bool = True) -> list[Violation]:
    found: list[Violation] = []
    if z.root is None or z.root not in z.machines:
        return [Violation("missing root", "the hierarchy has no root machine")]
    for mid, kids in z.children.items():
        for state, kid in kids.items():
            if kid not in z.machines:
                found.append(Violation("dangling child", f"{z.names[mid]}[{state}] -> {kid}"))
            if state not in z.machines[mid]:
                found.append(Violation("dangling child", f"{z.names[mid]} has no state {state}"))
    if found:
        return found
    for mid, machine in z.machines.items():
        if machine.alphabet != z.alphabet:
            found.append(Violation("alphabet mismatch", z.names[mid]))
    if z.parents(z.root):
        found.append(Violation("root has parent", z.names[z.root]))
    # cycle detection over nesting arcs
    colour: dict[int, int] = {}
    for top in z.machines:
        if top in colour:
            continue
        stack = [(top, iter(sorted(z.children[top].values())))]
        colour[top] = 1
        while stack:
            mid, it = stack[-1]
            kid = next(it, None)
            if kid is None:
                colour[mid] = 2
                stack.pop()
            elif colour.get(kid) == 1:
                found.append(Violation("cycle", f"nesting arc {z.names[mid]} -> {z.names[kid]} closes a cycle"))
            elif kid not in colour:
                colour[kid] = 1
                stack.append((kid, iter(sorted(z.children[kid].values()))))
    if any(v.kind == "cycle" for v in found):
        return found
    live = set(z.reachable_machines())
    for mid in sorted(set(z.machines) - live):
        found.append(Violation("orphan machine", f"{z.names[mid]} is not reachable from the root"))
    if z.mode == TREE:
        for mid in sorted(live):
            if len(z.parents(mid)) > 1:
                arcs = ", ".join(f"{z.names[p]}[{s}]" for p, s in sorted(z.parents(mid)))
                found.append(Violation("non-distinct state sets", f"{z.names[mid]} is nested at {arcs}"))
    if reachability:
        from .machines import reachable_states

        for mid in sorted(live):
            machine = z.machines[mid]
            unreachable = sorted(set(machine.states) - reachable_states(machine))
            if unreachable:
                found.append(Violation("unreachable state", f"{z.names[mid]} states {unreachable}"))
    return found


def to_tree(z: Himm, budget: int = 1 << 20) -> Himm:
    """Expand shared nesting into an isomorphic tree; paths are preserved unchanged."""
    tree = Himm(z.alphabet, TREE)
    made = 0

    def clone(mid: int) -> int:
        nonlocal made
        made += 1
        if made > budget:
            raise BudgetExceeded(f"more than {budget} machines")
        return tree.add_machine(z.machines[mid], z.names[mid])

    top = clone(z.root)
    stack = [(z.root, top)]
    while stack:
        src, dst = stack.pop()
        for state, kid in sorted(z.children[src].items()):
            copy = clone(kid)
            tree.set_child(dst, state, copy)
            stack.append((kid, copy))
    return tree
