import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from himm.machines import (
    Alphabet,
    MealyMachine,
    MultipleEntrances,
    NotWellDefined,
    StructuralError,
    contract,
    entrances,
    expand,
    is_module,
    machines_equal,
    reachable_states,
    restrict,
    roundtrip_holds,
    run_plan,
    step,
)

AB = Alphabet.of("a", "b")


def machine(arcs, start=0, n=None):
    n = n if n is not None else 1 + max([start] + [q for q in arcs] + [t for row in arcs.values() for t, _ in row.values()])
    return MealyMachine(tuple(range(n)), AB, arcs, start)


@st.composite
def small_machines(draw, max_states=4):
    n = draw(st.integers(1, max_states))
    arcs = {}
    for q in range(n):
        for a in range(2):
            if draw(st.booleans()):
                arcs.setdefault(q, {})[a] = (draw(st.integers(0, n - 1)), draw(st.integers(0, 2)))
    return MealyMachine(tuple(range(n)), AB, arcs, draw(st.integers(0, n - 1)))


def test_step_and_run_plan():
    m = machine({0: {0: (1, 2)}, 1: {1: (0, 3)}})
    assert step(m, 0, 0) == (1, 2.0)
    assert step(m, 0, 1) is None
    assert run_plan(m, 0, [0, 1, 0]) == ([(0, 0), (1, 1), (0, 0)], 7.0)
    assert run_plan(m, 0, [1]) is None
    assert run_plan(m, 0, []) == ([], 0.0)


def test_validation_errors():
    with pytest.raises(StructuralError):
        MealyMachine((0, 1), AB, {0: {0: (5, 1)}}, 0)
    with pytest.raises(StructuralError):
        MealyMachine((0,), AB, {}, 3)
    with pytest.raises(ValueError):
        MealyMachine((0,), AB, {0: {0: (0, -1)}}, 0)
    with pytest.raises(StructuralError):
        MealyMachine((0,), AB, {0: {7: (0, 1)}}, 0)


def test_alphabet_lookup():
    sigma = Alphabet.of("up", "down")
    assert sigma.index("down") == 1
    assert len(sigma) == 2


def test_start_counts_as_entrance():
    # the set {0, 2} is entered at 2 from outside and at 0 by starting there
    m = machine({0: {0: (1, 1)}, 1: {0: (2, 1)}, 2: {0: (1, 1)}})
    assert entrances(m, {0, 2}) == {0, 2}
    assert not is_module(m, {0, 2})
    assert not roundtrip_holds(m, {0, 2})


def test_literal_entrance_definition_breaks_roundtrip():
    # Counting only arcs from outside, {0, 2} would have the single entrance 2
    # and satisfy every exit condition, yet contract/expand moves the start
    # from 0 to 2, so the roundtrip fails.
    m = machine({0: {0: (1, 1)}, 1: {0: (2, 1)}, 2: {0: (1, 1)}})
    outside_only = {t for q, row in m.arcs.items() if q not in {0, 2} for t, _ in row.values() if t in {0, 2}}
    assert outside_only == {2}
    label = 3
    back = expand(contract(m, {0, 2}, label), label, MealyMachine((0, 2), AB, {}, 2))
    assert back.start == 2 and not machines_equal(back, m)


def test_contract_errors():
    # distinct exit targets on input a
    m = machine({0: {0: (2, 1)}, 1: {0: (3, 1)}, 2: {}, 3: {}})
    with pytest.raises(NotWellDefined):
        contract(m, {0, 1})
    # unequal exit costs
    m = machine({0: {0: (2, 1)}, 1: {0: (2, 5)}, 2: {}})
    with pytest.raises(NotWellDefined):
        contract(m, {0, 1})
    # an exit on a exists but state 1 lacks a
    m = machine({0: {0: (2, 1), 1: (1, 0)}, 1: {}, 2: {}})
    with pytest.raises(NotWellDefined):
        contract(m, {0, 1})


def test_contract_and_restrict_of_a_module():
    m = machine({0: {0: (1, 1)}, 1: {0: (2, 4), 1: (1, 2)}, 2: {0: (2, 4), 1: (3, 1)}, 3: {}})
    assert is_module(m, {1, 2})
    c = contract(m, {1, 2}, label=9)
    assert c.states == (0, 3, 9)
    assert c.arcs[0][0] == (9, 1.0)
    assert c.arcs[9] == {1: (3, 1.0)}
    r = restrict(m, {1, 2})
    assert r.start == 1
    assert r.arcs == {1: {0: (2, 4.0), 1: (1, 2.0)}, 2: {0: (2, 4.0)}}
    assert machines_equal(expand(c, 9, r), m)


def test_restrict_rejects_two_entrances():
    m = machine({0: {0: (1, 1), 1: (2, 1)}, 1: {}, 2: {}})
    with pytest.raises(MultipleEntrances):
        restrict(m, {1, 2})


def test_expand_reroutes_entry_and_inherits_exits():
    outer = MealyMachine((0, 1, 2), AB, {0: {0: (1, 1)}, 1: {1: (2, 3)}}, 0)
    inner = MealyMachine((5, 6), AB, {5: {0: (6, 1)}}, 5)
    out = expand(outer, 1, inner)
    assert out.arcs[0][0] == (5, 1.0)
    assert out.arcs[5] == {0: (6, 1.0), 1: (2, 3.0)}
    assert out.arcs[6] == {1: (2, 3.0)}
    with pytest.raises(StructuralError):
        expand(outer, 1, MealyMachine((0,), AB, {}, 0))


def test_whole_machine_is_a_module():
    m = machine({0: {0: (1, 1)}, 1: {1: (0, 1)}})
    assert is_module(m, {0, 1}) and roundtrip_holds(m, {0, 1})


def test_exhaustive_two_state_equivalence():
    options = [None] + [(t, c) for t in range(2) for c in (0, 1)]
    for combo in itertools.product(options, repeat=4):
        arcs = {q: {a: combo[2 * q + a] for a in range(2) if combo[2 * q + a]} for q in range(2)}
        for start in range(2):
            m = MealyMachine((0, 1), AB, arcs, start)
            for subset in ({0}, {1}, {0, 1}):
                assert is_module(m, subset) == roundtrip_holds(m, subset)


@given(small_machines(), st.data())
def test_module_iff_roundtrip(m, data):
    subset = data.draw(st.sets(st.sampled_from(m.states), min_size=1))
    assert is_module(m, subset) == roundtrip_holds(m, subset)


@given(small_machines(), st.data())
def test_predicates_invariant_under_relabelling(m, data):
    subset = data.draw(st.sets(st.sampled_from(m.states), min_size=1))
    perm = data.draw(st.permutations(m.states))
    rename = dict(zip(m.states, perm))
    arcs = {rename[q]: {a: (rename[t], c) for a, (t, c) in row.items()} for q, row in m.arcs.items()}
    other = MealyMachine(m.states, AB, arcs, rename[m.start])
    moved = {rename[q] for q in subset}
    assert is_module(m, subset) == is_module(other, moved)
    assert roundtrip_holds(m, subset) == roundtrip_holds(other, moved)
    assert machines_equal(m, other, rename)


@given(small_machines())
def test_reachable_contains_start_and_is_closed(m):
    seen = reachable_states(m)
    assert m.start in seen
    for q in seen:
        for t, _ in m.row(q).values():
            assert t in seen
