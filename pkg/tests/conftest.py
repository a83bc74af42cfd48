import random
import sys

import pytest

from superdelta.randgen import chart_of


@pytest.fixture
def rng():
    return random.Random(1234)


@pytest.fixture
def c11():
    return chart_of(1, 1)


@pytest.fixture
def c22():
    return chart_of(2, 2)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
