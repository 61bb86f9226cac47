import math

import pytest

from qndsim import load_model
from qndsim.config import RunConfig

TWO_PI = 2 * math.pi


@pytest.fixture(scope="session")
def cs():
    return load_model()


@pytest.fixture
def preset():
    return RunConfig()


@pytest.fixture
def preset_setup(preset):
    return preset.setup()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1].rstrip(":abc")), s)):
        terminalreporter.write_line(line)
