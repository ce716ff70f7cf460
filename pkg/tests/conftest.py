import random

import pytest
from hypothesis import HealthCheck, settings

from himm.baselines import FlatGraph, dijkstra
from himm.generators import example_system
from himm.hierarchy import flatten

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def example():
    return example_system()


def flat_distance(z, init, goal):
    """Independent oracle: Dijkstra on the flattened machine."""
    flat = flatten(z)
    graph, ids = FlatGraph.from_machine(flat.machine)
    s, t = ids[flat.index[tuple(init)]], ids[flat.index[tuple(goal)]]
    return dijkstra(graph, s, [t])[t].cost


@pytest.fixture
def oracle():
    return flat_distance


@pytest.fixture
def rng():
    return random.Random(12345)


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def report(request):
    """Record a one-line verdict for an acceptance criterion."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def emit(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda text: int(text.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
