"""Flow, speed, composition and train-size measurements.

Flow is the ring-wide density-speed product q = k * v, so every summary point
satisfies the fundamental identity by construction.  Speeds stay in cells/s
inside the simulator and are converted to m/s here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import COLLECTIVE, DOCKING, INDEPENDENT, MAV, ConfigError


@dataclass(frozen=True)
class FundamentalPoint:
    density: float  # veh/km/lane
    mean_flow: float  # veh/h/lane
    mean_speed: float  # m/s
    p_mav: float
    scenario: str | None
    seed: int


@dataclass
class TrainHistogram:
    """Counts of train sizes; bin 1 counts independent (and docking) modules."""

    l_max: int
    counts: dict = field(default_factory=dict)
    samples: int = 0

    def __post_init__(self):
        for size in range(1, self.l_max + 1):
            self.counts.setdefault(size, 0)

    def add(self, size, k=1):
        if not 1 <= size <= self.l_max:
            raise ValueError(f"train size {size} outside 1..{self.l_max}")
        self.counts[size] += k

    def merge(self, other):
        for size, c in other.counts.items():
            self.counts[size] += c
        self.samples += other.samples
        return self

    def modal_train_size(self):
        """Most frequent size among real trains (2..l_max); None if none."""
        best = None
        for size in range(2, self.l_max + 1):
            if self.counts[size] and (best is None or self.counts[size] > self.counts[best]):
                best = size
        return best


def _km_lanes(params):
    return params.road_length_km * params.lanes


def instantaneous_flow(state, params):
    """q = k * v * 3.6 in veh/h/lane (k in veh/km/lane, v in m/s)."""
    n = len(state)
    if n == 0:
        return 0.0
    k = n / _km_lanes(params)
    v = float(state.speed.mean()) * params.cell_length
    return k * v * 3.6


def mean_speed(state, params):
    if len(state) == 0:
        return 0.0
    return float(state.speed.mean()) * params.cell_length


def composition_ratios(state):
    """(independent + docking share, collective share, any MAVs present)."""
    mav = state.kind == MAV
    n_mav = int(mav.sum())
    if n_mav == 0:
        return 0.0, 0.0, False
    free = int(((state.mode == INDEPENDENT) | (state.mode == DOCKING)).sum())
    coll = int((state.mode == COLLECTIVE).sum())
    return free / n_mav, coll / n_mav, True


def sample_train_histogram(state, accumulator):
    """Add the current train sizes and the count of unattached MAVs."""
    from .mav import TrainRegistry

    free = int(((state.mode == INDEPENDENT) | (state.mode == DOCKING)).sum())
    if free:
        accumulator.add(1, free)
    for train in TrainRegistry.from_state(state):
        accumulator.add(train.size)
    accumulator.samples += 1
    return accumulator


def summarize_run(flow, speed, params, scenario=None, density=None):
    """Average flow and speed over the measuring window ``[t_measure_start, t_total)``."""
    if params.t_measure_start >= params.t_total:
        raise ConfigError("t_measure_start: must be below t_total")
    flow = np.asarray(flow, dtype=float)
    speed = np.asarray(speed, dtype=float)
    window = slice(params.t_measure_start, params.t_total)
    if density is None:
        density = params.vehicles_per_lane / params.road_length_km if params.road_length_km else 0.0
    v = float(speed[window].mean()) if len(speed[window]) else 0.0
    return FundamentalPoint(
        density=float(density),
        # k * mean(v) keeps q = k * v exact for the summary point
        mean_flow=float(density) * v * 3.6,
        mean_speed=v,
        p_mav=float(params.p_mav),
        scenario=scenario,
        seed=int(params.seed),
    )
