import numpy as np
import pytest

from l2gain import Annulus

# lines recorded by the acceptance suite, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def annulus2():
    return Annulus(2, 1.0, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def record():
    """``record(k, ok, detail)`` appends one pass/fail line for criterion ``k``."""

    def _record(k, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} [{k}] {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record
