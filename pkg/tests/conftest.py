import pytest

from darkkepler.binary import preset

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def jupiter():
    return preset("sun-jupiter")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
