import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hotspot_ipp.field import make_four_maxima_field  # noqa: E402
from hotspot_ipp.gp import Hyperparameters  # noqa: E402
from hotspot_ipp.planner import Pose  # noqa: E402

NOISE_STD = 0.05
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][2:])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def four_field():
    return make_four_maxima_field()


@pytest.fixture(scope="session")
def true_hyper():
    return Hyperparameters(0.251, (5.04, 5.04), NOISE_STD ** 2)


@pytest.fixture
def start_pose(four_field):
    return Pose.facing(-149.0, 16.0, four_field.region.center)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
