import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nkeps.network import NkEpsilonPolicy  # noqa: E402
from nkeps.synth import two_bus  # noqa: E402


@pytest.fixture
def twobus():
    """Demand 100 at A; genA 50 at A; genB 150 at B; line B->A rated 80."""
    return two_bus()


@pytest.fixture
def twobus_cand():
    return two_bus(candidates=True)


@pytest.fixture
def strict1():
    return NkEpsilonPolicy(1, (0.0, 0.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.LINES:
            terminalreporter.write_line(line)
