"""Atomic system modifications and the marking that drives incremental updates.

A modification target is either a machine id or, for addressing one
occurrence of a shared machine, the path prefix leading to it. Path targets in
shared mode first copy every shared machine along the path so that only that
occurrence changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from .hierarchy import SHARED, TREE, Himm
from .machines import MealyMachine, StructuralError

Target = Union[int, tuple[int, ...]]


class RemovingStartState(ValueError):
    pass


class StateNotFresh(ValueError):
    pass


class CompositionTooLarge(ValueError):
    pass


class TargetNotFound(LookupError):
    pass


@dataclass
class AddState:
    target: Target
    state: Optional[int] = None
    child: Optional[int] = None
    attach: Optional[Himm] = None
    name: Optional[str] = None


@dataclass
class SubtractState:
    target: Target
    state: int


@dataclass
class ArcModification:
    target: Target
    arcs: Mapping[int, Mapping[int, tuple[int, float]]]
    start: Optional[int] = None


@dataclass
class Composition:
    machine: MealyMachine
    parts: Sequence[Himm]
    name: Optional[str] = None


Modification = Union[AddState, SubtractState, ArcModification, Composition]


@dataclass
class Receipt:
    op: str
    target: int
    state: Optional[int] = None
    attached: set[int] = field(default_factory=set)
    removed: set[int] = field(default_factory=set)
    copies: list[int] = field(default_factory=list)


def _copy_occurrence(z: Himm, parent: int, state: int) -> int:
    kid = z.children[parent][state]
    copy = z.add_machine(z.machines[kid], z.names[kid] + "'")
    for q, grandkid in z.children[kid].items():
        z.set_child(copy, q, grandkid)
    z.set_child(parent, state, copy)
    return copy


def resolve_target(z: Himm, target: Target, copies: Optional[list[int]] = None) -> int:
    """Machine id for ``target``, un-sharing along a path target in shared mode."""
    if isinstance(target, int):
        if target not in z.machines:
            raise TargetNotFound(f"machine {target} not in the hierarchy")
        return target
    mid = z.root
    for state in target:
        kid = z.children.get(mid, {}).get(state)
        if kid is None:
            raise TargetNotFound(f"path {tuple(target)} does not lead to a machine")
        if z.mode == SHARED and len(z.parents(kid)) > 1:
            kid = _copy_occurrence(z, mid, state)
            if copies is not None:
                copies.append(kid)
        mid = kid
    return mid


def _adopt(z: Himm, other: Himm) -> set[int]:
    clash = set(other.reachable_machines()) & set(z.machines)
    if clash:
        raise StructuralError(f"machine ids {sorted(clash)} already present")
    if other.alphabet != z.alphabet:
        raise StructuralError("attached hierarchy uses a different alphabet")
    mids = other.reachable_machines()
    for mid in mids:
        z.add_machine(other.machines[mid], other.names[mid], mid=mid)
    for mid in mids:
        for q, kid in other.children[mid].items():
            z.set_child(mid, q, kid)
    return set(mids)


def apply(z: Himm, mod: Modification) -> Receipt:
    """Mutate ``z`` according to ``mod`` and describe what changed."""
    if isinstance(mod, Composition):
        return _apply_composition(z, mod)
    copies: list[int] = []
    mid = resolve_target(z, mod.target, copies)
    machine = z.machines[mid]
    if isinstance(mod, AddState):
        state = max(machine.states) + 1 if mod.state is None else mod.state
        if state in machine:
            raise StateNotFresh(f"state {state} already in {z.names[mid]}")
        names = dict(machine.state_names)
        if mod.name is not None:
            names[state] = mod.name
        z.replace_machine(mid, machine.replace(states=machine.states + (state,), state_names=names))
        receipt = Receipt("add_state", mid, state, copies=copies)
        if mod.attach is not None and mod.child is not None:
            raise ValueError("give either an attached hierarchy or an existing child, not both")
        if mod.attach is not None:
            receipt.attached = _adopt(z, mod.attach)
            z.set_child(mid, state, mod.attach.root)
        elif mod.child is not None:
            if mod.child not in z.machines:
                raise TargetNotFound(f"child machine {mod.child} not in the hierarchy")
            if z.mode == TREE:
                raise StructuralError("tree mode cannot nest an existing machine a second time")
            z.set_child(mid, state, mod.child)
        return receipt
    if isinstance(mod, SubtractState):
        if mod.state not in machine:
            raise TargetNotFound(f"state {mod.state} not in {z.names[mid]}")
        if mod.state == machine.start:
            raise RemovingStartState(f"state {mod.state} is the start of {z.names[mid]}")
        arcs = {
            q: {a: hit for a, hit in row.items() if hit[0] != mod.state}
            for q, row in machine.arcs.items()
            if q != mod.state
        }
        names = {q: n for q, n in machine.state_names.items() if q != mod.state}
        states = tuple(q for q in machine.states if q != mod.state)
        z.replace_machine(mid, machine.replace(states=states, arcs=arcs, state_names=names))
        removed = z.collect_garbage()
        return Receipt("subtract_state", mid, mod.state, removed=removed, copies=copies)
    if isinstance(mod, ArcModification):
        start = machine.start if mod.start is None else mod.start
        z.replace_machine(mid, machine.replace(arcs=mod.arcs, start=start))
        return Receipt("arc_modification", mid, copies=copies)
    raise TypeError(f"unknown modification {mod!r}")


def compose(machine: MealyMachine, parts: Sequence[Himm], name: Optional[str] = None) -> Himm:
    """New hierarchy with ``machine`` as root and part ``i`` nested at its ``i``-th state."""
    if len(parts) > len(machine.states):
        raise CompositionTooLarge(f"{len(parts)} parts but only {len(machine.states)} states")
    mode = SHARED if any(p.mode == SHARED for p in parts) else TREE
    out = Himm(machine.alphabet, mode)
    root = out.add_machine(machine, name)
    for state, part in zip(machine.states, parts):
        if mode == TREE:
            _adopt(out, part)
        elif part.root not in out.machines:
            _adopt_shared(out, part)
        out.set_child(root, state, part.root)
    return out


def _adopt_shared(out: Himm, part: Himm) -> None:
    if part.alphabet != out.alphabet:
        raise StructuralError("parts must share the root machine's alphabet")
    mids = [m for m in part.reachable_machines() if m not in out.machines]
    for mid in mids:
        out.add_machine(part.machines[mid], part.names[mid], mid=mid)
    for mid in mids:
        for q, kid in part.children[mid].items():
            out.set_child(mid, q, kid)


def _apply_composition(z: Himm, mod: Composition) -> Receipt:
    built = compose(mod.machine, mod.parts, mod.name)
    old = set(z.machines)
    z.__dict__.update(built.__dict__)
    return Receipt("composition", z.root, removed=old - set(z.machines))


def mark(z: Himm, marks: set[int], change: Union[Receipt, Modification]) -> set[int]:
    """Flag the changed machine and everything above it for recomputation."""
    if not isinstance(change, Receipt):
        if isinstance(change, Composition):
            target = z.root
        else:
            target = resolve_target(z, change.target)
        change = Receipt("unknown", target)
    marks -= change.removed
    marks |= z.ancestors(change.target)
    return marks


def mark_all(z: Himm) -> set[int]:
    return set(z.reachable_machines())


def is_rooted_subtree(z: Himm, marks: set[int]) -> bool:
    """Empty, or containing the root with every marked machine's parents marked."""
    if not marks:
        return True
    if z.root not in marks:
        return False
    return all(
        mid == z.root or any(p in marks for p, _ in z.parents(mid)) for mid in marks
    )
