import math
import random

from hypothesis import given
from hypothesis import strategies as st

from himm.exits import (
    ExitCostTable,
    augmented_for,
    build_augmented,
    compute_optimal_exits,
    exit_cost_oracle,
    fresh_table,
    replay_witness,
    search_exits,
)
from himm.generators import gen_recursive, gen_warehouse, random_himm
from himm.hierarchy import start_of
from himm.machines import Alphabet, MealyMachine

INF = math.inf

# Frozen from exit_cost_oracle on the worked example (inputs a, b, c).
EXAMPLE_EXITS = {
    "A": (2.0, 0.0, 0.0),
    "B": (0.0, 2.0, 2.0),
    "C": (0.0, 1.0, 0.0),
    "D": (0.0, 0.0, INF),
}


def by_name(z, table):
    return {z.names[mid]: table.cost[mid] for mid in z.reachable_machines()}


def test_example_table(example):
    table, searches = fresh_table(example)
    assert searches == 4
    assert by_name(example, table) == EXAMPLE_EXITS


def test_example_oracle_matches_frozen(example):
    for mid in example.reachable_machines():
        got = tuple(exit_cost_oracle(example, mid, a) for a in range(3))
        assert got == EXAMPLE_EXITS[example.names[mid]]


def test_augmented_machine_routes_missing_inputs_to_sinks():
    sigma = Alphabet.of("a", "b")
    m = MealyMachine((0, 1), sigma, {0: {0: (1, 2)}}, 0)
    aug = build_augmented(m, {1: (5.0, 7.0)})
    assert list(aug.arcs(0)) == [(0, (0, 1), 2.0), (1, (1, 1), 0.0)]
    assert list(aug.arcs(1)) == [(0, (1, 0), 5.0), (1, (1, 1), 7.0)]
    costs, witnesses = search_exits(aug)
    assert costs == [7.0, 0.0]
    assert witnesses == [((0, 0), (1, 0)), ((0, 1),)]


def test_unreachable_exit_is_infinite():
    sigma = Alphabet.of("a")
    m = MealyMachine((0,), sigma, {0: {0: (0, 1)}}, 0)
    costs, witnesses = search_exits(build_augmented(m))
    assert costs == [INF] and witnesses == [None]


@given(st.integers(0, 10**6), st.floats(0, 0.6))
def test_table_matches_oracle(seed, share):
    z = random_himm(random.Random(seed), share_prob=share)
    table, _ = fresh_table(z)
    for mid in z.reachable_machines():
        for a in range(len(z.alphabet)):
            assert table.cost[mid][a] == exit_cost_oracle(z, mid, a)


@given(st.integers(0, 10**6))
def test_witnesses_replay_to_their_cost(seed):
    z = random_himm(random.Random(seed))
    table, _ = fresh_table(z)
    for mid in z.reachable_machines():
        aug = augmented_for(z, table, mid)
        for a, witness in enumerate(table.witness[mid]):
            if witness is None:
                continue
            node, cost = replay_witness(aug, witness)
            assert node == (1, a) and cost == table.cost[mid][a]


def test_shared_machines_are_searched_once():
    assert fresh_table(gen_recursive(30, shared=True))[1] == 30
    assert fresh_table(gen_warehouse(shared=True).z)[1] == 3
    assert fresh_table(gen_warehouse().z)[1] == 1011


def test_unmarked_entries_are_reused(example):
    table, _ = fresh_table(example)
    assert compute_optimal_exits(example, set(), table) == 0
    chain = example.chain(example.find("D", "4"))
    # a mark below an unmarked parent is never reached
    assert compute_optimal_exits(example, {chain[-1]}, table) == 0
    assert compute_optimal_exits(example, set(chain), table) == 3


def test_missing_entries_are_filled(example):
    table = ExitCostTable()
    assert compute_optimal_exits(example, set(), table) == 4
    assert table.searches == 4


def test_warehouse_location_exits():
    w = gen_warehouse(1, (1, 1), (1, 1))
    table, _ = fresh_table(w.z)
    location = w.z.children[w.house_ids[0]][1]
    names = w.z.alphabet.names
    costs = dict(zip(names, table.cost[location]))
    # every input but desk is unsupported at idle; desk needs one step to the arm
    assert costs == {"left": 0.0, "right": 0.0, "up": 0.0, "down": 0.0, "desk": 0.5, "quit": 0.0, "scan": 0.0}
    assert start_of(w.z) == (0, 0)
