import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from permreg import Dataset, standardize  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_problem():
    """Standardized (n=30, p=6) regression instance."""
    r = np.random.default_rng(7)
    X = r.standard_normal((30, 6))
    Y = X @ r.standard_normal(6) + 0.5 * r.standard_normal(30)
    D, _ = standardize(Dataset(X, Y))
    return D.X, D.Y


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
