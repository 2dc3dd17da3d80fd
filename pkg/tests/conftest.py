import numpy as np
import pytest

from driftindex.harness import SyntheticConfig, generate


@pytest.fixture(scope="session")
def drift_stream():
    """Small 3-d stream with sudden shifts every 1000 points."""
    return generate(SyntheticConfig(dim=3, n_points=6000, period=1000, magnitude=6, seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
