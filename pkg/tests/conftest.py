import numpy as np
import pytest

from epslssvr.data import Dataset
from epslssvr.kernel import KernelConfig
from epslssvr.lssvr import LssvrConfig


def random_problem(rng, n, d, y_offset=1.0):
    """Inputs on [0, 1]^d with smooth targets; the offset keeps b_LS away from 0."""
    X = rng.uniform(0.0, 1.0, size=(n, d))
    y = np.sin(3.0 * X.sum(axis=1)) + y_offset + 0.1 * rng.standard_normal(n)
    return Dataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def two_point():
    """X = {0, 1}, y = (0, 1) with gamma = 1, c = 1: solvable by hand."""
    return Dataset([[0.0], [1.0]], [0.0, 1.0]), LssvrConfig(1.0, KernelConfig(1.0))


# acceptance summary lines, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
