import pytest

from skillgov.fixtures import load_fixture
from skillgov.simworld import scenario_preset


@pytest.fixture(scope="session")
def t6():
    return load_fixture("t6")


@pytest.fixture(scope="session")
def dominant():
    return scenario_preset("dominant", base_seed=0)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
