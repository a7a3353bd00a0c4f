import numpy as np
import pytest

from frontlab import flows


@pytest.fixture(scope="session")
def cellular():
    return flows.make_flow("cellular")


@pytest.fixture(scope="session")
def shear():
    return flows.make_flow("shear")


@pytest.fixture(scope="session")
def zero():
    return flows.make_flow("zero")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from tests.test_acceptance import LINES
    except ImportError:
        try:
            from test_acceptance import LINES
        except ImportError:
            return
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
