import numpy as np
import pytest

from mcast_lte.channel import CqiTable

INTRO_N = 10
INTRO_R = 1000.0


@pytest.fixture
def intro_separate():
    """Two single-UE groups with alternating 1000 / 100 kbps PRBs."""
    even = np.arange(INTRO_N) % 2 == 0
    u1 = np.where(even, 1000.0, 100.0)
    u2 = np.where(even, 100.0, 1000.0)
    return np.vstack([u1, u2]), INTRO_R


@pytest.fixture
def table():
    return CqiTable.default()


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance as acc

    if not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acc.RESULTS, key=lambda k: int(k[1:])):
        ok, detail = acc.RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
