import numpy as np
import pytest

from itlm import Dataset, LinkFunction

PIECEWISE = LinkFunction.piecewise(1.0, 1.2)


def one_sample(phi, y, link=None):
    return Dataset(np.atleast_2d(np.asarray(phi, dtype=float)), [y], link or LinkFunction())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def central_difference(f, theta, h=1e-6):
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for j in range(theta.size):
        e = np.zeros_like(theta)
        e[j] = h
        grad[j] = (f(theta + e) - f(theta - e)) / (2 * h)
    return grad


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
