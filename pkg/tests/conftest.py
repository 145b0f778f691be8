import pytest

from nigmix.variates import make_rng


@pytest.fixture
def rng():
    return make_rng(20240601)


def pytest_collection_modifyitems(config, items):
    # acceptance runs last so its summary lines sit at the end of the log
    items.sort(key=lambda item: "test_acceptance" in item.nodeid)


def pytest_terminal_summary(terminalreporter):
    from tests import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)

