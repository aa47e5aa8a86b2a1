import numpy as np
import pytest

from potcap.geometry import CompactSetSpec, Domain, Grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def ball3():
    return Grid(Domain.ball(np.zeros(3), 1.0), 1 / 16)


@pytest.fixture(scope="session")
def disk():
    return Grid(Domain.ball(np.zeros(2), 1.0), 1 / 32)


@pytest.fixture(scope="session")
def origin3():
    return CompactSetSpec.point(np.zeros(3))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
