"""Mealy machines and the module-theory operators built on them.

States are non-negative ints (kept stable when states are removed, so they may
have holes), inputs are dense ints indexing a shared :class:`Alphabet`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

INF = math.inf

Arcs = Mapping[int, Mapping[int, tuple[int, float]]]


class StructuralError(ValueError):
    """A state, input or id that does not exist where it was expected."""


class NotWellDefined(ValueError):
    def __init__(self, input_symbol: int, detail: str):
        super().__init__(f"contraction not well defined for input {input_symbol}: {detail}")
        self.input_symbol = input_symbol
        self.detail = detail


class MultipleEntrances(ValueError):
    def __init__(self, entrances: Iterable[int]):
        self.entrances = sorted(entrances)
        super().__init__(f"state set has entrances {self.entrances}")


@dataclass(frozen=True)
class Alphabet:
    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("input names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise StructuralError(f"unknown input {name!r}") from None

    @classmethod
    def of(cls, *names: str) -> "Alphabet":
        return cls(tuple(names))


@dataclass(frozen=True, eq=False)
class MealyMachine:
    """Partial transition system with costed arcs.

    ``arcs[q][a] = (target, cost)``, so the transition and cost functions
    are defined on the same (state, input) pairs by construction.
    """

    states: tuple[int, ...]
    alphabet: Alphabet
    arcs: Arcs
    start: int
    state_names: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        states = tuple(sorted(set(self.states)))
        object.__setattr__(self, "states", states)
        known = set(states)
        if self.start not in known:
            raise StructuralError(f"start state {self.start} not in Q")
        frozen: dict[int, dict[int, tuple[int, float]]] = {}
        for q, row in self.arcs.items():
            if q not in known:
                raise StructuralError(f"arc source {q} not in Q")
            clean = {}
            for a, (target, cost) in row.items():
                if not 0 <= a < len(self.alphabet):
                    raise StructuralError(f"input {a} outside alphabet")
                if target not in known:
                    raise StructuralError(f"arc target {target} not in Q")
                cost = float(cost)
                if not cost >= 0:
                    raise ValueError(f"negative or NaN cost on ({q}, {a})")
                clean[a] = (target, cost)
            if clean:
                frozen[q] = clean
        object.__setattr__(self, "arcs", frozen)
        object.__setattr__(self, "_known", frozenset(known))

    @property
    def num_inputs(self) -> int:
        return len(self.alphabet)

    def __contains__(self, q: int) -> bool:
        return q in self._known

    def __len__(self) -> int:
        return len(self.states)

    def row(self, q: int) -> Mapping[int, tuple[int, float]]:
        return self.arcs.get(q, {})

    def transitions(self) -> Iterator[tuple[int, int, int, float]]:
        """Yield ``(source, input, target, cost)`` in index order."""
        for q in self.states:
            row = self.arcs.get(q)
            if row:
                for a in sorted(row):
                    target, cost = row[a]
                    yield q, a, target, cost

    def name_of(self, q: int) -> str:
        return self.state_names.get(q, str(q))

    def replace(self, **changes) -> "MealyMachine":
        fields = dict(
            states=self.states,
            alphabet=self.alphabet,
            arcs=self.arcs,
            start=self.start,
            state_names=self.state_names,
        )
        fields.update(changes)
        return MealyMachine(**fields)

    def __repr__(self) -> str:
        return f"MealyMachine(states={len(self.states)}, arcs={sum(map(len, self.arcs.values()))}, start={self.start})"


def step(machine: MealyMachine, q: int, a: int) -> Optional[tuple[int, float]]:
    """One transition, or ``None`` when ``a`` is unsupported at ``q``."""
    if q not in machine:
        raise StructuralError(f"state {q} not in machine")
    return machine.arcs.get(q, {}).get(a)


def run_plan(
    machine: MealyMachine, q0: int, plan: Sequence[int]
) -> Optional[tuple[list[tuple[int, int]], float]]:
    """Induced trajectory and cumulative cost, or ``None`` if the machine stops."""
    if q0 not in machine:
        raise StructuralError(f"state {q0} not in machine")
    trajectory = []
    total = 0.0
    q = q0
    for a in plan:
        hit = machine.arcs.get(q, {}).get(a)
        if hit is None:
            return None
        trajectory.append((q, a))
        q, cost = hit
        total += cost
    return trajectory, total


def reachable_states(machine: MealyMachine) -> set[int]:
    seen = {machine.start}
    stack = [machine.start]
    while stack:
        q = stack.pop()
        for target, _ in machine.arcs.get(q, {}).values():
            if target not in seen:
                seen.add(target)
                stack.append(target)
    return seen


def entrances(machine: MealyMachine, subset: Iterable[int]) -> set[int]:
    """States of ``subset`` entered from outside it.

    The start state counts as an entrance when it lies in ``subset``: the
    machine is entered there before any input is read.
    """
    inside = set(subset)
    found = {machine.start} & inside
    for q, row in machine.arcs.items():
        if q in inside:
            continue
        for target, _ in row.values():
            if target in inside:
                found.add(target)
    return found


def _check_subset(machine: MealyMachine, subset: Iterable[int]) -> frozenset[int]:
    inside = frozenset(subset)
    if not inside:
        raise ValueError("state set must be nonempty")
    missing = inside - set(machine.states)
    if missing:
        raise StructuralError(f"states {sorted(missing)} not in machine")
    return inside


def is_module(machine: MealyMachine, subset: Iterable[int]) -> bool:
    inside = _check_subset(machine, subset)
    if len(entrances(machine, inside)) > 1:
        return False
    arcs = machine.arcs
    for a in range(machine.num_inputs):
        exit_arc = None
        has_exit = False
        for q in inside:
            hit = arcs.get(q, {}).get(a)
            if hit is None or hit[0] in inside:
                continue
            if exit_arc is None:
                exit_arc = hit
                has_exit = True
            elif exit_arc != hit:
                return False
        if has_exit and any(a not in arcs.get(q, {}) for q in inside):
            return False
    return True


def contract(machine: MealyMachine, subset: Iterable[int], label: Optional[int] = None) -> MealyMachine:
    """Collapse ``subset`` into one state (``label``, default ``min(subset)``)."""
    inside = _check_subset(machine, subset)
    label = min(inside) if label is None else label
    outside = [q for q in machine.states if q not in inside]
    if label in outside:
        raise StructuralError(f"label {label} collides with a remaining state")
    arcs: dict[int, dict[int, tuple[int, float]]] = {}
    for q in outside:
        row = {}
        for a, (target, cost) in machine.arcs.get(q, {}).items():
            row[a] = (label if target in inside else target, cost)
        arcs[q] = row
    collapsed = {}
    for a in range(machine.num_inputs):
        exits = set()
        covered = True
        for q in inside:
            hit = machine.arcs.get(q, {}).get(a)
            if hit is None:
                covered = False
            elif hit[0] not in inside:
                exits.add(hit)
        if not exits:
            continue
        if len({t for t, _ in exits}) > 1:
            raise NotWellDefined(a, f"distinct exit targets {sorted(t for t, _ in exits)}")
        if len(exits) > 1:
            raise NotWellDefined(a, f"unequal exit costs {sorted(c for _, c in exits)}")
        if not covered:
            raise NotWellDefined(a, "exit exists but some states lack the input")
        collapsed[a] = next(iter(exits))
    arcs[label] = collapsed
    start = label if machine.start in inside else machine.start
    return MealyMachine(tuple(outside) + (label,), machine.alphabet, arcs, start)


def restrict(machine: MealyMachine, subset: Iterable[int]) -> MealyMachine:
    """Subgraph induced on ``subset`` with start at its unique entrance.

    A set nothing enters starts at its smallest state; that start is never used.
    """
    inside = _check_subset(machine, subset)
    found = entrances(machine, inside) or {min(inside)}
    if len(found) > 1:
        raise MultipleEntrances(found)
    arcs = {
        q: {a: hit for a, hit in machine.arcs.get(q, {}).items() if hit[0] in inside}
        for q in inside
    }
    names = {q: n for q, n in machine.state_names.items() if q in inside}
    return MealyMachine(tuple(inside), machine.alphabet, arcs, found.pop(), names)


def expand(outer: MealyMachine, v: int, inner: MealyMachine) -> MealyMachine:
    """Replace state ``v`` of ``outer`` by the machine ``inner``."""
    if v not in outer:
        raise StructuralError(f"state {v} not in outer machine")
    kept = [q for q in outer.states if q != v]
    clash = set(kept) & set(inner.states)
    if clash:
        raise StructuralError(f"state ids {sorted(clash)} appear in both machines")
    arcs: dict[int, dict[int, tuple[int, float]]] = {}
    for q in kept:
        arcs[q] = {
            a: (inner.start if target == v else target, cost)
            for a, (target, cost) in outer.arcs.get(q, {}).items()
        }
    v_row = outer.arcs.get(v, {})
    for q in inner.states:
        row = dict(inner.arcs.get(q, {}))
        for a, (target, cost) in v_row.items():
            if a not in row:
                row[a] = (inner.start if target == v else target, cost)
        arcs[q] = row
    start = inner.start if outer.start == v else outer.start
    return MealyMachine(tuple(kept) + inner.states, outer.alphabet, arcs, start)


def machines_equal(
    left: MealyMachine, right: MealyMachine, relabel: Optional[Mapping[int, int]] = None
) -> bool:
    """Structural equality, optionally after renaming ``left``'s states."""
    if left.alphabet != right.alphabet:
        return False
    rename = (lambda q: relabel.get(q, q)) if relabel else (lambda q: q)
    if sorted(map(rename, left.states)) != list(right.states):
        return False
    if rename(left.start) != right.start:
        return False
    for q in left.states:
        mine = {a: (rename(t), c) for a, (t, c) in left.arcs.get(q, {}).items()}
        if mine != dict(right.arcs.get(rename(q), {})):
            return False
    return True


def roundtrip_holds(machine: MealyMachine, subset: Iterable[int]) -> bool:
    """Whether expanding the contraction of ``subset`` by its restriction gives ``machine`` back."""
    inside = _check_subset(machine, subset)
    label = max(machine.states) + 1
    try:
        outer = contract(machine, inside, label)
        inner = restrict(machine, inside)
    except (NotWellDefined, MultipleEntrances):
        return False
    return machines_equal(expand(outer, label, inner), machine)
