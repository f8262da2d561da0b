import numpy as np
import pytest

from emrkc.ionic import get_model
from emrkc.monodomain import Conductivity, Grid, StimulusProtocol, build_problem


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def hh():
    return get_model("hh")


@pytest.fixture(scope="session")
def cable():
    """Short 1-D HH cable with the default stimulus."""
    return build_problem(Grid((4.0,), (0.1,)), Conductivity(), get_model("hh"), StimulusProtocol())


@pytest.fixture(scope="session")
def quiet_cable():
    return build_problem(Grid((4.0,), (0.1,)), Conductivity(), get_model("hh"), StimulusProtocol.off())


@pytest.fixture(scope="session")
def sheet():
    return build_problem(Grid((2.0, 1.0), (0.1,)), Conductivity(), get_model("hh"),
                         StimulusProtocol(box=((0.0, 0.5), (0.0, 0.5))))


ACCEPTANCE_LINES = {}


def record_criterion(number, passed, detail):
    """Store and print the one-line verdict of an acceptance criterion."""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
