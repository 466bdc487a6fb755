import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import helpers  # noqa: E402  (needs the path tweak above)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if helpers.ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance summary")
        for line in helpers.ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)
