import pytest

from mdsieve.tuples import AdmissibleTuple, SieveSetup
from mdsieve.weights import LambdaTable, WeightParams


def trial_division_is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


@pytest.fixture(scope="session")
def twin():
    return SieveSetup(AdmissibleTuple.from_pairs([(1, 0), (1, 2)]))


@pytest.fixture(scope="session")
def twin_table_50(twin):
    return LambdaTable.build(WeightParams(twin, 50))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
