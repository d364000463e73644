import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import DEFAULT_GRID_POINTS, DEFAULT_RULE  # noqa: E402
from numerics import make_grid  # noqa: E402
from wavefn import builtin  # noqa: E402


@pytest.fixture(scope="session")
def grid512():
    return make_grid(DEFAULT_RULE, DEFAULT_GRID_POINTS)


@pytest.fixture(scope="session")
def constant(grid512):
    return builtin("constant", grid512)


@pytest.fixture(scope="session")
def phi1(grid512):
    return builtin("dirichlet", grid512, m=1)


@pytest.fixture(scope="session")
def g3(grid512):
    return builtin("bump_g3", grid512)


@pytest.fixture(scope="session")
def psi4(grid512):
    return builtin("prolate", grid512, R=4.0)
