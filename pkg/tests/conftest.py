import numpy as np
import pytest

from annealslice.qubo import Qubo, Topology, chimera_topology


@pytest.fixture(scope="session")
def cell():
    """Single K_{4,4} Chimera cell."""
    return chimera_topology(1, 1, 4)


@pytest.fixture
def two_var_qubo():
    t = Topology(2, [(0, 1)], name="pair")
    return Qubo.from_dicts(t, {0: 1.0, 1: -2.0}, {(0, 1): 3.0})


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
