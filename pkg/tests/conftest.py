import sys
from pathlib import Path

import numpy as np
import pytest

from conceptvtt.pool import Dataset, generate_dataset

sys.path.insert(0, str(Path(__file__).parent))

FAKE_MUE = str(Path(__file__).parent / "fake_mue.py")


@pytest.fixture
def tiny_dataset():
    labels = np.array([[1, 0], [0, 0], [1, 1], [0, 1]])
    return Dataset(["s0", "s1", "s2", "s3"], ["A", "B"], labels)


@pytest.fixture(scope="session")
def oct_like():
    """200 samples x 11 concepts with skewed prevalence."""
    return generate_dataset(200, 11, seed=1)


@pytest.fixture
def fake_mue_cmd():
    return lambda mode: [sys.executable, FAKE_MUE, mode]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
