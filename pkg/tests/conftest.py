import pytest

from quantale_forge.cli import CORE, MUTATIONS, load


@pytest.fixture(scope="session")
def core():
    return load([CORE])


@pytest.fixture(scope="session")
def corpus():
    """Core objects plus the mutation fixtures."""
    return load([CORE, MUTATIONS])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS, line

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(line(k))
