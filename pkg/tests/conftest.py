from __future__ import annotations

import sys

import numpy as np
import pytest

from fracorlicz import build_grid


@pytest.fixture(scope="session")
def grid101():
    return build_grid("interval:-1,1", 101, 0.5)


@pytest.fixture(scope="session")
def grid201():
    return build_grid("interval:-1,1", 201, 0.5)


@pytest.fixture(scope="session")
def grid_small():
    return build_grid("interval:-1,1", 21, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_u(grid, rng, amp=1.0):
    return grid.from_interior(amp * rng.uniform(-1.0, 1.0, grid.n_interior))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
