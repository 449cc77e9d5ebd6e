import pytest

from sknet import gates as gt
from sknet import nets

# acceptance lines collected by tests/test_acceptance.py
CRITERIA_LINES: list[str] = []


@pytest.fixture(scope="session")
def gs1():
    return gt.standard_gateset(1)


@pytest.fixture(scope="session")
def params_q2():
    return nets.NetParams(q=2.0, epsilon=0.45, L=60, d=2)


@pytest.fixture(scope="session")
def exhaustive8(gs1, params_q2):
    return nets.build_exhaustive(gs1, params_q2, 8)


@pytest.fixture(scope="session")
def exhaustive14(gs1, params_q2):
    """Exhaustive SU(2) net whose shells all pass the coverage audit."""
    return nets.build_exhaustive(gs1, params_q2, 14)


@pytest.fixture(scope="session")
def heuristic_params():
    return nets.NetParams(q=2 ** 0.25, epsilon=0.05, L=60, d=2)


def seed_shell0(gs, params, max_len=3):
    full = nets.build_exhaustive(gs, params, max_len)
    seed = nets.ShellNet(params, gs)
    for e in full.shells[0]:
        if e.word.length:
            seed.try_insert(e.word, e.matrix, e.dist)
    return seed


@pytest.fixture(scope="session")
def heuristic_build(gs1, heuristic_params):
    return nets.build_heuristic(gs1, heuristic_params, seed_shell0(gs1, heuristic_params))


def pytest_terminal_summary(terminalreporter):
    if CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA_LINES:
            terminalreporter.write_line(line)
