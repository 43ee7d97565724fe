import numpy as np
import pytest

from centroidal_rl.dynamics import a1_params


@pytest.fixture
def a1():
    return a1_params()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion (printed in the summary)."""
    def record(number, ok, detail, status=None):
        status = status or ("PASS" if ok else "FAIL")
        _CRITERIA.append((number, f"criterion {number}: {status} - {detail}"))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA, key=lambda item: item[0]):
        terminalreporter.write_line(line)
