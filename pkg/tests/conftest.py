import numpy as np
import pytest

from periodic_dde.operator import solve_fixed_point
from periodic_dde.scenarios import delayed_exp_system

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def exp_small():
    return delayed_exp_system(0.1, 0.1)


@pytest.fixture(scope="session")
def exp_large():
    return delayed_exp_system(401.0, 0.1)


@pytest.fixture(scope="session")
def fp_small(exp_small):
    return solve_fixed_point(exp_small)


@pytest.fixture(scope="session")
def fp_large(exp_large):
    return solve_fixed_point(exp_large)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
