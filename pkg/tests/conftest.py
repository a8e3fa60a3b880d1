import numpy as np
import pytest

from dpdro import Dataset, RngStream

ACCEPTANCE_LINES = []


def se_bound(draws, target, k=3.0):
    draws = np.asarray(draws, dtype=float)
    se = draws.std(ddof=1) / np.sqrt(draws.size)
    return abs(draws.mean() - target) <= k * se


def regression_data(n=12, d=3, seed=0):
    g = RngStream(seed).generator()
    X = g.standard_normal((n, d))
    return Dataset(X, X @ np.linspace(1.0, -1.0, d) + 0.3 * g.standard_normal(n))


def logistic_data(n=12, d=3, seed=0):
    g = RngStream(seed).generator()
    X = g.standard_normal((n, d))
    return Dataset(X, np.where(g.random(n) < 0.5, 1.0, -1.0))


def location_data(n=12, seed=0):
    return Dataset(None, RngStream(seed).generator().standard_normal(n) + 0.5)


@pytest.fixture
def reg_data():
    return regression_data()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
