import os
import sys

import pytest
from hypothesis import HealthCheck, settings

from bethelog.hydrogen import build_hydrogen, default_grid
from bethelog.spectrum import from_lines, single_line

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=15, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

@pytest.fixture
def toy():
    return single_line(1.0, 1.5)


@pytest.fixture
def three_lines():
    return from_lines([(0.4, 1.2), (1.0, 0.5), (2.5, 0.3)])


@pytest.fixture(scope="session")
def hydrogen_1s():
    return build_hydrogen("1s", 20, default_grid("1s", 400))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", {}) if mod else {}
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
