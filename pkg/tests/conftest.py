import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("asyncons", deadline=None)
settings.load_profile("asyncons")

from helpers import EXAMPLE1, EXAMPLE2, X0

ACCEPTANCE_LINES = []


@pytest.fixture
def F1():
    return EXAMPLE1.copy()


@pytest.fixture
def F2():
    return EXAMPLE2.copy()


@pytest.fixture
def x0():
    return X0.copy()


@pytest.fixture
def rng():
    return np.random.default_rng(20160712)


@pytest.fixture
def record_acceptance():
    def record(number, ok, text):
        line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {text}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
