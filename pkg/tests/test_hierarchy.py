import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from himm.generators import gen_recursive, gen_warehouse, random_himm
from himm.hierarchy import (
    SHARED,
    TREE,
    BudgetExceeded,
    Himm,
    flatten,
    hier_step,
    hier_step_level,
    is_himm_module,
    run_himm_plan,
    start_of,
    to_tree,
    validate,
)
from himm.machines import Alphabet, MealyMachine, StructuralError

A, B, C = range(3)


def test_example_transitions(example):
    z = example
    # from 5 on a: C cannot move, A moves C -> B (cost 3), then B and D enter at their starts
    assert hier_step(z, z.find("C", "5"), A) == (z.find("D", "4"), 3.0)
    # from 4 on b: D cannot move, B moves D -> 3 (cost 2)
    assert hier_step(z, z.find("D", "4"), B) == (z.find("B", "3"), 2.0)
    # climbing past the root stops the machine
    assert hier_step(z, z.find("D", "4"), C) == (z.find("D", "2"), 1.0)
    assert hier_step(z, z.find("A", "1"), B) is None


def test_firing_level(example):
    z = example
    path, cost, level = hier_step_level(z, z.find("C", "5"), A)
    assert level == 0 and cost == 3.0
    _, _, level = hier_step_level(z, z.find("D", "2"), C)
    assert level == 2


def test_start_of(example):
    z = example
    assert start_of(z) == z.find("A", "1")
    b = z.chain(z.find("B", "3"))[1]
    assert start_of(z, b, (1,)) == z.find("D", "4")


def test_example_flattening(example):
    flat = flatten(example)
    assert len(flat.leaves) == 6
    assert flat.leaves == sorted(flat.leaves)
    assert flat.machine.start == flat.index[start_of(example)]
    assert example.leaf_count() == 6


def test_warehouse_start_descends_into_house():
    w = gen_warehouse(2, (2, 2), (1, 1))
    assert start_of(w.z) == (0, 0)
    assert start_of(w.z, w.house_ids[1], (1,)) == (1, 0)


def _bare(n=2):
    sigma = Alphabet.of("a")
    return sigma, MealyMachine(tuple(range(n)), sigma, {0: {0: (1, 1)}}, 0)


def test_validate_reports_each_kind():
    sigma, m = _bare()
    z = Himm(sigma, TREE)
    assert [v.kind for v in validate(Himm(sigma))] == ["missing root"]
    root = z.add_machine(m, "root")
    kid = z.add_machine(m, "kid")
    z.set_child(root, 0, kid)
    z.set_child(root, 1, kid)
    kinds = {v.kind for v in validate(z)}
    assert "non-distinct state sets" in kinds
    z.clear_child(root, 1)
    z.set_child(kid, 1, root)
    assert {v.kind for v in validate(z)} >= {"cycle"}
    z.clear_child(kid, 1)
    z.children[root][1] = 999
    assert [v.kind for v in validate(z)] == ["dangling child"]
    del z.children[root][1]
    z.add_machine(m, "lonely")
    assert [v.kind for v in validate(z)] == ["orphan machine"]


def test_validate_unreachable_state():
    sigma = Alphabet.of("a")
    z = Himm(sigma)
    z.add_machine(MealyMachine((0, 1), sigma, {}, 0), "top")
    assert [v.kind for v in validate(z)] == ["unreachable state"]
    assert validate(z, reachability=False) == []


def test_alphabet_mismatch_rejected():
    sigma, m = _bare()
    z = Himm(sigma)
    with pytest.raises(StructuralError):
        z.add_machine(MealyMachine((0,), Alphabet.of("b"), {}, 0))


def test_flatten_budget():
    with pytest.raises(BudgetExceeded):
        flatten(gen_recursive(6), budget=10)


def test_recursive_shared_equals_tree_stepwise():
    shared, tree = gen_recursive(4, shared=True), gen_recursive(4)
    assert len(shared.machines) == 4 and len(tree.machines) == 15
    leaves = [p for p, _ in tree.leaves()]
    assert leaves == [p for p, _ in shared.leaves()]
    for leaf in leaves:
        for a in range(2):
            assert hier_step(tree, leaf, a) == hier_step(shared, leaf, a)


def test_warehouse_shared_equals_tree_stepwise():
    shared = gen_warehouse(2, (2, 3), (2, 1), shared=True).z
    tree = gen_warehouse(2, (2, 3), (2, 1)).z
    leaves = [p for p, _ in tree.leaves()]
    assert leaves == [p for p, _ in shared.leaves()]
    for leaf in leaves:
        for a in range(len(tree.alphabet)):
            assert hier_step(tree, leaf, a) == hier_step(shared, leaf, a)


@given(st.integers(0, 10**6))
def test_to_tree_preserves_behaviour(seed):
    z = random_himm(random.Random(seed), share_prob=0.5)
    tree = to_tree(z)
    assert tree.mode == TREE and validate(tree) == []
    flat_z, flat_t = flatten(z), flatten(tree)
    assert flat_z.leaves == flat_t.leaves
    assert {q: dict(r) for q, r in flat_z.machine.arcs.items()} == {q: dict(r) for q, r in flat_t.machine.arcs.items()}


@given(st.integers(0, 10**6))
def test_flattening_agrees_with_hier_step(seed):
    z = random_himm(random.Random(seed), share_prob=0.3)
    flat = flatten(z)
    assert len(flat.leaves) == z.leaf_count()
    for leaf in flat.leaves:
        for a in range(len(z.alphabet)):
            hit = hier_step(z, leaf, a)
            arc = flat.machine.row(flat.index[leaf]).get(a)
            if hit is None:
                assert arc is None
            else:
                assert arc == (flat.index[hit[0]], hit[1])


@given(st.integers(0, 10**6), st.lists(st.integers(0, 3), max_size=12))
def test_plan_replay_matches_flat_run(seed, word):
    z = random_himm(random.Random(seed))
    word = [a % len(z.alphabet) for a in word]
    flat = flatten(z)
    start = start_of(z)
    out = run_himm_plan(z, start, word)
    q, total = flat.index[start], 0.0
    for a in word:
        arc = flat.machine.row(q).get(a)
        if arc is None:
            assert out is None
            return
        q, total = arc[0], total + arc[1]
    assert out is not None and out[2] == flat.leaves[q] and out[1] == total


@given(st.integers(0, 10**6))
def test_every_machine_spans_a_module(seed):
    z = random_himm(random.Random(seed))
    for mid in z.reachable_machines():
        prefix = z.path_to_machine(mid)
        assert is_himm_module(z, [prefix + (q,) for q in z.machines[mid].states])


def test_shared_mode_rejects_nothing_tree_rejects_sharing():
    z = gen_recursive(3, shared=True)
    assert z.mode == SHARED and validate(z) == []
    z.mode = TREE
    assert any(v.kind == "non-distinct state sets" for v in validate(z))
