import pytest

from riccati_shooting.equilibrium import EconomyParams
from riccati_shooting.shooting import find_critical

# reference economy: A = 2
ECON = EconomyParams(beta=0.025, mu_D=0.02, sigma_D=0.2, gamma=0.5)


@pytest.fixture(scope="session")
def econ():
    return ECON


@pytest.fixture(scope="session")
def critical():
    return find_critical(0.5, 0.2, 2.0)


@pytest.fixture(scope="session")
def critical_a25():
    return find_critical(0.5, 0.2, 2.5)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[7:9])):
            terminalreporter.write_line(line)
