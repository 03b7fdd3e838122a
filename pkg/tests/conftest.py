import math

import numpy as np
import pytest

from nsdiag import suites
from nsdiag.grid import Grid


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 2 * math.pi)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32, 2 * math.pi)


@pytest.fixture(scope="session")
def tg_record():
    """Short decaying Taylor-Green run on a 4 pi box, every step saved (shared with the suites)."""
    return suites.solver_record(suites.QUICK_RECORD)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
