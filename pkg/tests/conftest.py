import os
import sys

import numpy as np
import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

from mavsim import Kind, Mode, RoadState, SimParams, Vehicle  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def conv(i, lane, pos, speed=0, length=10):
    return Vehicle(i, Kind.CONVENTIONAL, Mode.NOT_APPLICABLE, lane, pos, speed, length)


def mav(i, lane, pos, speed=0, mode=Mode.INDEPENDENT, train=None, target=None, length=7):
    return Vehicle(i, Kind.MAV, mode, lane, pos, speed, length, train, target)


def ring(vehicles, road_length=20_000, time=0):
    return RoadState.from_vehicles(vehicles, road_length, time=time)


def random_state(rng, road_length, n_per_lane, p_mav=0.5, max_speed=0):
    """Non-overlapping random placement on both lanes."""
    kinds, lanes, pos, lengths = [], [], [], []
    for ln in range(2):
        n = n_per_lane[ln]
        if n == 0:
            continue
        kind = (rng.random(n) < p_mav).astype(np.int8)
        length = np.where(kind == 1, 7, 10)
        free = road_length - int(length.sum())
        assert free >= 0
        # split the free cells over n gaps plus some unused slack
        gaps = rng.multinomial(free, np.full(n + 1, 1.0 / (n + 1)))[:n]
        offset = int(rng.integers(road_length))
        fronts = (offset + np.cumsum(gaps + length) - 1) % road_length
        kinds.extend(kind.tolist())
        lanes.extend([ln] * n)
        pos.extend(fronts.tolist())
        lengths.extend(length.tolist())
    speed = rng.integers(0, max_speed + 1, len(kinds)) if max_speed else None
    return RoadState(kinds, lanes, pos, lengths, road_length, speed=speed)


@pytest.fixture
def params():
    return SimParams()


@pytest.fixture
def small_params():
    """Short run on a 2 km ring for engine tests."""
    return SimParams(road_length=4_000, t_total=400, t_dock_start=100,
                     t_measure_start=300, density=40, p_mav=0.5, seed=3)


# one verdict line per acceptance criterion, printed after the test summary
ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
