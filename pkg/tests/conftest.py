from fractions import Fraction

import numpy as np
import pytest

from avgk.core import FiniteZoneDistribution

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []

EX2_MATRIX = np.array(
    [
        [1, 0, 0, 0, 0, 0],
        [0, 0.5, 0.5, 0, 0, 0],
        [0, 0, 0, 1 / 3, 1 / 3, 1 / 3],
    ]
)


@pytest.fixture
def ex2_matrix():
    return EX2_MATRIX.copy()


@pytest.fixture
def single_zone():
    third = Fraction(1, 3)
    return FiniteZoneDistribution((Fraction(1),), ((third, third, third),))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
