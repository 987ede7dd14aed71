import numpy as np
import pytest

from ocurvelab import Pipeline
from ocurvelab.examples import e1, e2

from .helpers import normal_two_mode, quadratic, random_polynomial


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    return pytestconfig._acceptance_lines


@pytest.fixture(scope="session")
def e1_pipe():
    return Pipeline.from_hamiltonian(e1())


@pytest.fixture(scope="session")
def e2_pipe():
    return Pipeline.from_hamiltonian(e2())


@pytest.fixture(scope="session")
def n4_pipe():
    """A generic (non-normal) N = 4 system, omega = (3, -1)."""
    rng = np.random.default_rng(3)
    H = quadratic((3, -1)) + random_polynomial(2, (3, 4), rng, denom=8)
    return Pipeline.from_hamiltonian(H, order=8)


@pytest.fixture(scope="session")
def n5_pipe():
    omega, H = normal_two_mode((1, 4), np.random.default_rng(5), degree=8)
    return Pipeline.from_hamiltonian(H, order=8)
