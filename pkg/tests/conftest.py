import numpy as np
import pytest

from stochqm.grid import Grid
from stochqm.state import PhysicalConstants


@pytest.fixture
def c():
    return PhysicalConstants()


@pytest.fixture
def line():
    return Grid(1, 256, 24.0)


@pytest.fixture
def fine_line():
    return Grid(1, 512, 24.0)


def bulk_max(values, mask):
    return float(np.abs(values)[..., mask].max())


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail=""):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
