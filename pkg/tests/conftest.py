import pytest

from multibump.newton import solve_all
from multibump.verify import Enumerator
from multibump.weight import sin_weight

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def w3():
    return sin_weight(3)


@pytest.fixture(scope="session")
def w5():
    return sin_weight(5)


@pytest.fixture(scope="session")
def enum3(w3):
    return Enumerator(w3, 3.0)


@pytest.fixture(scope="session")
def enum5(w5):
    return Enumerator(w5, 3.0)


@pytest.fixture(scope="session")
def newton3(w3):
    cache = {}

    def get(lam, extrapolate=False):
        key = (lam, extrapolate)
        if key not in cache:
            cache[key] = solve_all(lam, w3, 3.0, extrapolate=extrapolate)
        return cache[key]
    return get


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
