import pytest

from rbmwalk.acceptance import EnsembleCache

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def mc_cache():
    """Monte Carlo ensembles shared by the sampler and acceptance tests."""
    return EnsembleCache()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
