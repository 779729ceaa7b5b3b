import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from disentangler.qsim import Statevector  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture
def bell():
    v = np.zeros(4, dtype=complex)
    v[[0, 3]] = 1 / np.sqrt(2)
    return Statevector(v)


@pytest.fixture
def ghz3():
    v = np.zeros(8, dtype=complex)
    v[[0, 7]] = 1 / np.sqrt(2)
    return Statevector(v)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
