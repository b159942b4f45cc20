import warnings

import pytest

from weaktime.errors import FarFieldWarning
from weaktime.model import CoherentState, PhysicalParams, SquareBarrier
from weaktime.scenario import Scenario
from weaktime.tptd import build_distribution
from weaktime.weakvals import uncertainty_report, weak_value_series

REF_GAMMA = 0.001
X_POST = 100.0

ACCEPTANCE_LINES = []


def make_scenario(gamma=REF_GAMMA, height=1.0, **controls):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FarFieldWarning)
        state = CoherentState(gamma=gamma, x_center=-100.0, p_incident=0.25)
    s = Scenario(state, SquareBarrier(height, 1.0), PhysicalParams(1.0, 0.5))
    return s.with_controls(**controls) if controls else s


class Case:
    """A scenario with its distribution, weak-value series and summary, built once."""

    def __init__(self, scenario, x=X_POST):
        self.scenario = scenario
        self.x = x
        self.dist = build_distribution(scenario, x)
        self.series = weak_value_series(scenario, self.dist)
        self.summary = uncertainty_report(self.series, self.dist, scenario.params.hbar)


@pytest.fixture(scope="session")
def ref():
    return Case(make_scenario())


@pytest.fixture(scope="session")
def narrow():
    return Case(make_scenario(gamma=REF_GAMMA / 4))


@pytest.fixture(scope="session")
def free():
    return Case(make_scenario(height=0.0))


@pytest.fixture(scope="session")
def shifted():
    return Case(make_scenario(), x=150.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
