import numpy as np
import pytest

from zdpgg import GameSpec, pinning_strategy

ACCEPTANCE_LINES = []


@pytest.fixture
def spec3():
    return GameSpec(3, 1.6)


@pytest.fixture
def ref_pin(spec3):
    return pinning_strategy(spec3, 0.08, 0.31)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def _report(label, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
