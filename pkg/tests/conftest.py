"""Shared fixtures plus the acceptance-summary hook.

test_acceptance.py records one PASS/FAIL line per criterion through the
``acceptance_log`` fixture; the terminal-summary hook replays those lines
at the end of the run so they are visible even with output capture on.
"""

import numpy as np
import pytest

from irblab.transmon import DeviceParams

ACCEPTANCE_KEY = pytest.StashKey()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(ACCEPTANCE_KEY, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def device():
    """Default transmon parameters used across the physics tests."""
    return DeviceParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
