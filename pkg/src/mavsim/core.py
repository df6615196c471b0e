"""Units, parameter sets, vehicle/road state and neighbor queries.

Everything inside the simulator is expressed in integer cells and cells/s.
Vehicle state is stored as parallel numpy arrays indexed by vehicle id so the
numba kernels can walk it without Python objects; :class:`Vehicle` is a
read-only view for callers and tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import IntEnum

import numpy as np
from numba import njit

# kind codes
CONVENTIONAL = 0
MAV = 1

# mode codes
NOT_APPLICABLE = 0
INDEPENDENT = 1
DOCKING = 2
COLLECTIVE = 3


class Kind(IntEnum):
    CONVENTIONAL = CONVENTIONAL
    MAV = MAV


class Mode(IntEnum):
    NOT_APPLICABLE = NOT_APPLICABLE
    INDEPENDENT = INDEPENDENT
    DOCKING = DOCKING
    COLLECTIVE = COLLECTIVE


class ConfigError(ValueError):
    """Raised for invalid or inconsistent simulation parameters."""


class SimulationFault(RuntimeError):
    """An engine invariant was violated; the run cannot continue."""

    def __init__(self, message, dump=None):
        super().__init__(message)
        self.dump = dump


def to_cells(value, cell_length=0.5, name="value"):
    """Convert a length (m), speed (m/s) or acceleration (m/s^2) to cell units.

    The time step is 1 s, so all three dimensions share the factor
    ``1 / cell_length``.  Conversions that do not land on an integer are
    rejected rather than rounded.
    """
    q = value / cell_length
    n = round(q)
    if not math.isclose(q, n, rel_tol=0.0, abs_tol=1e-9):
        raise ConfigError(
            f"{name}: {value!r} is not a whole number of {cell_length} m cells"
        )
    return int(n)


def from_cells(n, cell_length=0.5):
    return n * cell_length


# Config key -> (unit dimension, default in physical units).
# "m" / "m/s" / "m/s2" are converted with to_cells; "cell" values are already
# lattice units; "raw" values are passed through.
PHYSICAL_FIELDS = {
    "cell_length": ("raw", 0.5),
    "veh_length": ("cell", 10),
    "mav_length": ("cell", 7),
    "v_max": ("m/s", 33.0),
    "v_max_mav": ("m/s", 30.5),
    "T": ("raw", 1.8),
    "a": ("m/s2", 1.0),
    "b_max": ("m/s2", 3.0),
    "b_defense": ("m/s2", 1.0),
    "p_a": ("raw", 0.85),
    "p_b": ("raw", 0.52),
    "p_c": ("raw", 0.1),
    "g_safety": ("cell", 20),
    "v_c": ("cell", 30),
    "alpha": ("raw", 10.0),
    "p_lc": ("raw", 0.2),
    "a_p": ("m/s2", 1.0),
    "d_intra": ("m", 0.0),
    "p_d": ("raw", 0.2),
    "l_max": ("raw", 5),
    "road_length": ("m", 10_000.0),
    "lanes": ("raw", 2),
    "p_mav": ("raw", 0.0),
    "density": ("raw", 60.0),
    "t_total": ("raw", 12_000),
    "t_dock_start": ("raw", 5_000),
    "t_measure_start": ("raw", 10_000),
    "docking_enabled_scenario": ("raw", True),
    "seed": ("raw", 0),
    "detach_interval": ("raw", 1),
    "hist_interval": ("raw", 100),
}


@dataclass(frozen=True)
class SimParams:
    """Model constants and scenario controls in internal cell units.

    Defaults are the published two-lane TSM and MAV parameter tables at
    0.5 m cells.  ``density`` is vehicles per km *per lane*.
    """

    cell_length: float = 0.5
    veh_length: int = 10
    mav_length: int = 7
    v_max: int = 66
    v_max_mav: int = 61
    T: float = 1.8
    a: int = 2
    b_max: int = 6
    b_defense: int = 2
    p_a: float = 0.85
    p_b: float = 0.52
    p_c: float = 0.1
    g_safety: int = 20
    v_c: int = 30
    alpha: float = 10.0
    p_lc: float = 0.2
    a_p: int = 2
    d_intra: int = 0
    p_d: float = 0.2
    l_max: int = 5
    road_length: int = 20_000
    lanes: int = 2
    p_mav: float = 0.0
    density: float = 60.0
    t_total: int = 12_000
    t_dock_start: int = 5_000
    t_measure_start: int = 10_000
    docking_enabled_scenario: bool = True
    seed: int = 0
    # steps between detachment checks (1 = every step)
    detach_interval: int = 1
    # steps between train-size histogram samples
    hist_interval: int = 100

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.lanes != 2:
            raise ConfigError("lanes: only two-lane roads are supported")
        for name in ("veh_length", "mav_length", "v_max", "v_max_mav", "a",
                     "b_max", "b_defense", "g_safety", "a_p", "d_intra",
                     "road_length", "l_max", "t_total", "t_dock_start",
                     "t_measure_start", "detach_interval", "hist_interval"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name}: expected an integer, got {value!r}")
            if value < 0:
                raise ConfigError(f"{name}: must be non-negative, got {value}")
        if self.veh_length < 1 or self.mav_length < 1:
            raise ConfigError("veh_length/mav_length: must be at least one cell")
        if self.b_max <= 0:
            raise ConfigError("b_max: must be positive")
        if self.T <= 0:
            raise ConfigError("T: must be positive")
        if self.g_safety < self.b_defense or self.g_safety < self.a:
            raise ConfigError("g_safety: must be >= b_defense and >= a")
        if not self.v_max > self.v_max_mav:
            raise ConfigError("v_max_mav: must be strictly below v_max")
        if self.l_max < 2:
            raise ConfigError("l_max: must be at least 2")
        for name in ("p_mav", "p_lc", "p_d", "p_a", "p_b", "p_c"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1], got {value}")
        if self.density < 0:
            raise ConfigError("density: must be non-negative")
        n = self.vehicles_per_lane
        if n * max(self.veh_length, self.mav_length) > self.road_length:
            raise ConfigError(
                f"density: {self.density} veh/km/lane does not fit on the road"
            )
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if self.detach_interval < 1 or self.hist_interval < 1:
            raise ConfigError("detach_interval/hist_interval: must be >= 1")

    @property
    def road_length_km(self):
        return self.road_length * self.cell_length / 1000.0

    @property
    def vehicles_per_lane(self):
        return int(math.floor(self.density * self.road_length_km + 0.5))

    @property
    def t_fraction(self):
        """T as an exact (numerator, denominator) pair for integer comparisons."""
        from fractions import Fraction

        f = Fraction(self.T).limit_denominator(10_000)
        return f.numerator, f.denominator

    @classmethod
    def from_physical(cls, **values):
        """Build from physical units (m, m/s, m/s^2) as used in configs."""
        unknown = set(values) - set(PHYSICAL_FIELDS)
        if unknown:
            raise ConfigError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        cell = float(values.get("cell_length", PHYSICAL_FIELDS["cell_length"][1]))
        if cell <= 0:
            raise ConfigError("cell_length: must be positive")
        kwargs = {}
        for name, (dim, default) in PHYSICAL_FIELDS.items():
            value = values.get(name, default)
            if dim in ("m", "m/s", "m/s2"):
                if name == "b_max":
                    # tables list the deceleration with a negative sign
                    value = abs(value)
                value = to_cells(float(value), cell, name)
            elif dim == "cell":
                if float(value) != int(value):
                    raise ConfigError(f"{name}: expected whole cells, got {value!r}")
                value = int(value)
            kwargs[name] = value
        for name in ("l_max", "lanes", "t_total", "t_dock_start",
                     "t_measure_start", "seed", "detach_interval", "hist_interval"):
            value = kwargs[name]
            if isinstance(value, float) and value.is_integer():
                kwargs[name] = int(value)
        for name in ("p_mav", "density", "T", "alpha", "p_lc", "p_d", "p_a",
                     "p_b", "p_c", "cell_length"):
            kwargs[name] = float(kwargs[name])
        kwargs["docking_enabled_scenario"] = bool(kwargs["docking_enabled_scenario"])
        return cls(**kwargs)

    def to_physical(self):
        out = {}
        for name, (dim, _) in PHYSICAL_FIELDS.items():
            value = getattr(self, name)
            if dim in ("m", "m/s", "m/s2"):
                value = from_cells(value, self.cell_length)
            out[name] = value
        return out

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class Vehicle:
    id: int
    kind: Kind
    mode: Mode
    lane: int
    position: int
    speed: int
    length: int
    train: int | None = None
    docking_target: int | None = None

    def __post_init__(self):
        if self.kind == CONVENTIONAL and (self.mode != NOT_APPLICABLE or self.train is not None):
            raise ValueError(f"vehicle {self.id}: conventional vehicles have no MAV mode")
        if self.kind == MAV and self.mode == NOT_APPLICABLE:
            raise ValueError(f"vehicle {self.id}: a MAV needs an operating mode")
        if (self.mode == COLLECTIVE) != (self.train is not None):
            raise ValueError(f"vehicle {self.id}: collective mode and train membership go together")
        if self.mode == DOCKING and self.docking_target is None:
            raise ValueError(f"vehicle {self.id}: docking needs a target")
        if self.speed < 0 or self.length < 1:
            raise ValueError(f"vehicle {self.id}: negative speed or empty length")


@dataclass(frozen=True)
class NeighborView:
    """Gaps and leader attributes seen by one vehicle.

    ``d`` is the same-lane gap to the leader.  ``d_other`` / ``d_back`` are
    measured on the target lane at the vehicle's longitudinal span; a
    negative value there means the span already overlaps a vehicle on that
    lane.  Empty lanes report ``road_length`` and a leader id of -1.
    """

    d: int
    leader_id: int
    leader_speed: int
    leader_gap: int
    leader_kind: int
    leader_mode: int
    leader_train_size: int
    d_other: int
    d_back: int
    target_leader_id: int
    target_leader_kind: int
    target_leader_mode: int
    target_leader_train_size: int


@njit(cache=True)
def build_index(lane, pos, road_length, n_lanes):
    """Sort vehicles by (lane, position).

    Returns ``order`` (ids sorted), the matching sorted keys, per-lane segment
    starts (length ``n_lanes + 1``) and the rank of every id inside ``order``.
    """
    n = lane.shape[0]
    keys = np.empty(n, np.int64)
    for i in range(n):
        keys[i] = lane[i] * road_length + pos[i]
    order = np.argsort(keys, kind="mergesort")
    sorted_keys = keys[order]
    starts = np.zeros(n_lanes + 1, np.int64)
    for i in range(n):
        starts[lane[i] + 1] += 1
    for k in range(n_lanes):
        starts[k + 1] += starts[k]
    rank = np.empty(n, np.int64)
    for k in range(n):
        rank[order[k]] = k
    return order, sorted_keys, starts, rank


@njit(cache=True)
def _finish_index(order, keys, rank, lane, pos, road_length):
    for k in range(order.shape[0]):
        i = order[k]
        keys[k] = lane[i] * road_length + pos[i]
        rank[i] = k


@njit(cache=True)
def _reverse(a, lo, hi):
    hi -= 1
    while lo < hi:
        a[lo], a[hi] = a[hi], a[lo]
        lo += 1
        hi -= 1


@njit(cache=True)
def reindex_after_move(order, keys, starts, rank, lane, pos, road_length):
    """Refresh the index in place after a synchronous position update.

    Vehicles cannot pass each other within a lane, so each lane's cyclic
    order is unchanged and only the wrap point moves.  Returns False if the
    result is not sorted (something overtook), in which case the caller must
    rebuild from scratch.
    """
    n_lanes = starts.shape[0] - 1
    for ln in range(n_lanes):
        s = starts[ln]
        e = starts[ln + 1]
        r = s
        for k in range(s, e - 1):
            if pos[order[k + 1]] < pos[order[k]]:
                r = k + 1
                break
        if r != s:
            # rotate order[s:e] left so order[r] comes first
            _reverse(order, s, r)
            _reverse(order, r, e)
            _reverse(order, s, e)
    _finish_index(order, keys, rank, lane, pos, road_length)
    for ln in range(n_lanes):
        for k in range(starts[ln], starts[ln + 1] - 1):
            if keys[k] >= keys[k + 1]:
                return False
    return True


@njit(cache=True)
def reindex_after_lane_change(order, keys, starts, rank, lane, pos, road_length):
    """Refresh a two-lane index in place after lateral moves.

    Each new lane segment is a merge of the vehicles that stayed and those
    that arrived from the other lane; both runs are already position-sorted.
    """
    n = order.shape[0]
    merged = np.empty(n, np.int64)
    new_starts = np.zeros(3, np.int64)
    w = 0
    for ln in range(2):
        new_starts[ln] = w
        other = 1 - ln
        a = starts[ln]
        ae = starts[ln + 1]
        b = starts[other]
        be = starts[other + 1]
        while True:
            while a < ae and lane[order[a]] != ln:
                a += 1
            while b < be and lane[order[b]] != ln:
                b += 1
            if a == ae and b == be:
                break
            if b == be or (a < ae and pos[order[a]] <= pos[order[b]]):
                merged[w] = order[a]
                a += 1
            else:
                merged[w] = order[b]
                b += 1
            w += 1
    new_starts[2] = w
    for k in range(n):
        order[k] = merged[k]
    for k in range(3):
        starts[k] = new_starts[k]
    _finish_index(order, keys, rank, lane, pos, road_length)


@njit(cache=True)
def ring_gap(x, x_leader, leader_length, road_length):
    """Gap from a front at ``x`` to the rear of a leader whose front is at
    ``x_leader``.  A leader at the same cell counts as one lap ahead (the
    lone-vehicle self-leader convention)."""
    delta = (x_leader - x) % road_length
    if delta == 0:
        delta = road_length
    return delta - leader_length


@njit(cache=True)
def rear_gap(x, own_length, x_follower, road_length):
    """Gap from a follower's front at ``x_follower`` to the rear of a vehicle
    whose front is at ``x``; negative when they overlap."""
    return (x - x_follower) % road_length - own_length


@njit(cache=True)
def compute_neighbors(order, starts, lane, pos, length, road_length,
                      lead, gap, olead, ofol):
    """Fill per-vehicle neighbour arrays from a two-lane index.

    ``lead``/``gap``: same-lane leader id and gap.  ``olead``/``ofol``:
    leader (front strictly ahead) and follower (front at or behind) on the
    other lane at the vehicle's own position, -1 if that lane is empty.
    """
    for ln in range(2):
        s = starts[ln]
        e = starts[ln + 1]
        so = starts[1 - ln]
        eo = starts[2 - ln]
        p = so
        for k in range(s, e):
            i = order[k]
            j = order[k + 1] if k + 1 < e else order[s]
            lead[i] = j
            gap[i] = ring_gap(pos[i], pos[j], length[j], road_length)
            if so == eo:
                olead[i] = -1
                ofol[i] = -1
                continue
            x = pos[i]
            while p < eo and pos[order[p]] <= x:
                p += 1
            olead[i] = order[p] if p < eo else order[so]
            ofol[i] = order[p - 1] if p > so else order[eo - 1]


@njit(cache=True)
def compute_train_sizes(mode, front, back, size):
    """``size[i]`` = modules in i's train, 1 for modules outside a train."""
    n = mode.shape[0]
    for i in range(n):
        size[i] = 1
    for i in range(n):
        if mode[i] == COLLECTIVE and front[i] < 0:
            m = 1
            j = back[i]
            while j >= 0:
                m += 1
                j = back[j]
            j = i
            while j >= 0:
                size[j] = m
                j = back[j]


@njit(cache=True, inline="always")
def lane_leader(i, lane, order, starts, rank):
    ln = lane[i]
    r = rank[i] + 1
    if r == starts[ln + 1]:
        r = starts[ln]
    return order[r]


@njit(cache=True, inline="always")
def lane_follower(i, lane, order, starts, rank):
    ln = lane[i]
    r = rank[i] - 1
    if r < starts[ln]:
        r = starts[ln + 1] - 1
    return order[r]


@njit(cache=True, inline="always")
def gap_to(x, j, pos, length, road_length):
    """Front-bumper gap from a front at cell ``x`` to the rear of vehicle ``j``.

    A leader whose front coincides with ``x`` is taken to be one lap ahead,
    which gives the lone-vehicle self-leader convention.
    """
    delta = (pos[j] - x) % road_length
    if delta == 0:
        delta = road_length
    return delta - length[j]


@njit(cache=True, inline="always")
def other_lane_neighbors(x, target_lane, order, sorted_keys, starts, road_length):
    """Leader (front strictly ahead of ``x``) and follower (front at or behind
    ``x``) on ``target_lane``; (-1, -1) when the lane is empty."""
    s = starts[target_lane]
    e = starts[target_lane + 1]
    if s == e:
        return -1, -1
    key = target_lane * road_length + x
    k = s + np.searchsorted(sorted_keys[s:e], key, side="right")
    lead = order[k] if k < e else order[s]
    fol = order[k - 1] if k > s else order[e - 1]
    return lead, fol


@njit(cache=True, inline="always")
def back_gap(x, own_length, f, pos, road_length):
    """Gap from follower ``f``'s front to the rear of a vehicle whose front is
    at ``x``; negative when they overlap."""
    if f < 0:
        return road_length
    return (x - pos[f]) % road_length - own_length


@njit(cache=True, inline="always")
def train_leader_of(i, front):
    j = i
    while front[j] >= 0:
        j = front[j]
    return j


@njit(cache=True, inline="always")
def train_size_of(i, mode, front, back):
    """Number of modules in ``i``'s train (1 for a module outside any train)."""
    if mode[i] != COLLECTIVE:
        return 1
    j = train_leader_of(i, front)
    n = 1
    while back[j] >= 0:
        j = back[j]
        n += 1
    return n


class RoadState:
    """Two ring lanes of vehicles stored as parallel arrays indexed by id.

    The per-lane ordered index (``order``/``starts``/``rank``) is rebuilt by
    :meth:`reindex`; the engine does this after every pass that moves
    vehicles.  Trains are recorded as front/back links between coupled
    modules plus a train id per member.
    """

    def __init__(self, kind, lane, pos, length, road_length, lanes=2,
                 speed=None, mode=None, time=0):
        n = len(kind)
        self.road_length = int(road_length)
        self.lanes = int(lanes)
        self.kind = np.asarray(kind, dtype=np.int8).copy()
        self.lane = np.asarray(lane, dtype=np.int64).copy()
        self.pos = np.asarray(pos, dtype=np.int64).copy()
        self.length = np.asarray(length, dtype=np.int64).copy()
        self.speed = (np.zeros(n, np.int64) if speed is None
                      else np.asarray(speed, dtype=np.int64).copy())
        if mode is None:
            mode = np.where(self.kind == MAV, INDEPENDENT, NOT_APPLICABLE)
        self.mode = np.asarray(mode, dtype=np.int8).copy()
        self.train_id = np.full(n, -1, np.int64)
        self.front = np.full(n, -1, np.int64)
        self.back = np.full(n, -1, np.int64)
        self.target = np.full(n, -1, np.int64)
        self.next_train_id = 0
        self.time = int(time)
        self.reindex()

    @classmethod
    def from_vehicles(cls, vehicles, road_length, lanes=2, time=0):
        """Build a state from :class:`Vehicle` records (ids must be 0..n-1).

        Members sharing a ``train`` value must sit bumper-to-bumper-ish on one
        lane; their order is recovered from positions.
        """
        vehicles = sorted(vehicles, key=lambda v: v.id)
        if [v.id for v in vehicles] != list(range(len(vehicles))):
            raise ValueError("vehicle ids must be 0..n-1")
        state = cls(
            kind=[int(v.kind) for v in vehicles],
            lane=[v.lane for v in vehicles],
            pos=[v.position for v in vehicles],
            length=[v.length for v in vehicles],
            speed=[v.speed for v in vehicles],
            mode=[int(v.mode) for v in vehicles],
            road_length=road_length,
            lanes=lanes,
            time=time,
        )
        for v in vehicles:
            if v.docking_target is not None:
                state.target[v.id] = v.docking_target
            if v.train is not None:
                state.train_id[v.id] = v.train
        members = {}
        for v in vehicles:
            if v.train is not None:
                members.setdefault(v.train, []).append(v.id)
        for ids in members.values():
            links = {}
            for i in ids:
                j = int(lane_leader(i, state.lane, state.order, state.starts, state.rank))
                if j != i and state.train_id[j] == state.train_id[i]:
                    links[i] = j
            if len(links) == len(ids):
                # the train fills its lane: cut the loop at the widest gap
                cut = max(ids, key=lambda i: gap_to(state.pos[i], links[i], state.pos,
                                                    state.length, road_length))
                del links[cut]
            for i, j in links.items():
                state.front[i] = j
                state.back[j] = i
        if len(vehicles) and state.train_id.max() >= 0:
            state.next_train_id = int(state.train_id.max()) + 1
        return state

    def __len__(self):
        return self.kind.shape[0]

    def reindex(self):
        self.order, self.sorted_keys, self.starts, self.rank = build_index(
            self.lane, self.pos, self.road_length, self.lanes
        )

    def copy(self):
        other = object.__new__(RoadState)
        for key, value in self.__dict__.items():
            setattr(other, key, value.copy() if isinstance(value, np.ndarray) else value)
        return other

    def vehicle(self, i):
        tid = int(self.train_id[i])
        tgt = int(self.target[i])
        return Vehicle(
            id=int(i),
            kind=Kind(int(self.kind[i])),
            mode=Mode(int(self.mode[i])),
            lane=int(self.lane[i]),
            position=int(self.pos[i]),
            speed=int(self.speed[i]),
            length=int(self.length[i]),
            train=tid if tid >= 0 else None,
            docking_target=tgt if tgt >= 0 else None,
        )

    @property
    def vehicles(self):
        return [self.vehicle(i) for i in range(len(self))]

    def leader(self, i):
        return int(lane_leader(i, self.lane, self.order, self.starts, self.rank))

    def neighbors(self):
        """(lead, gap, olead, ofol, train_size) arrays for the current index."""
        n = len(self)
        lead, gap, olead, ofol, size = (np.empty(n, np.int64) for _ in range(5))
        compute_neighbors(self.order, self.starts, self.lane, self.pos, self.length,
                          self.road_length, lead, gap, olead, ofol)
        compute_train_sizes(self.mode, self.front, self.back, size)
        return lead, gap, olead, ofol, size

    def lane_follower(self, i):
        return int(lane_follower(i, self.lane, self.order, self.starts, self.rank))

    def occupancy(self):
        """Dense (lanes, road_length) grid of vehicle ids (-1 = empty).

        Raises :class:`SimulationFault` if two vehicles claim one cell.
        """
        grid = np.full((self.lanes, self.road_length), -1, np.int64)
        for i in range(len(self)):
            cells = (self.pos[i] - np.arange(self.length[i])) % self.road_length
            row = grid[self.lane[i]]
            if (row[cells] >= 0).any():
                clash = int(row[cells][row[cells] >= 0][0])
                raise SimulationFault(f"vehicles {clash} and {i} overlap on lane {self.lane[i]}")
            row[cells] = i
        return grid

    def check_index(self):
        """Compare the ordered index against a from-scratch rebuild."""
        order, keys, starts, rank = build_index(
            self.lane, self.pos, self.road_length, self.lanes
        )
        return (np.array_equal(order, self.order) and np.array_equal(starts, self.starts)
                and np.array_equal(rank, self.rank))

    def dump(self):
        return {
            "time": self.time,
            "kind": self.kind.tolist(),
            "mode": self.mode.tolist(),
            "lane": self.lane.tolist(),
            "pos": self.pos.tolist(),
            "speed": self.speed.tolist(),
            "length": self.length.tolist(),
            "train_id": self.train_id.tolist(),
            "front": self.front.tolist(),
            "back": self.back.tolist(),
            "target": self.target.tolist(),
        }


def neighbor_view(state, vehicle_id, target_lane=None):
    """Gaps and leader attributes for ``vehicle_id``.

    ``target_lane`` defaults to the adjacent lane.  Passing the vehicle's own
    lane measures the target-lane quantities on that lane, excluding the
    vehicle itself.
    """
    i = int(vehicle_id)
    if not 0 <= i < len(state):
        raise IndexError(f"no vehicle {vehicle_id}")
    if target_lane is None:
        target_lane = 1 - int(state.lane[i])
    if not 0 <= target_lane < state.lanes:
        raise ValueError(f"invalid lane {target_lane}")
    R = state.road_length
    j = state.leader(i)
    d = int(gap_to(state.pos[i], j, state.pos, state.length, R))
    jl = state.leader(j)
    d_l = int(gap_to(state.pos[j], jl, state.pos, state.length, R))

    def attrs(k):
        if k < 0:
            return -1, -1, 0
        size = int(train_size_of(k, state.mode, state.front, state.back))
        return int(state.kind[k]), int(state.mode[k]), size

    lk, lm, ls = attrs(j)
    if target_lane == state.lane[i]:
        lead, fol = (j, state.lane_follower(i)) if j != i else (-1, -1)
    else:
        lead, fol = other_lane_neighbors(
            state.pos[i], target_lane, state.order, state.sorted_keys, state.starts, R
        )
    if lead < 0:
        d_other, d_back = R, R
    else:
        d_other = int(gap_to(state.pos[i], lead, state.pos, state.length, R))
        d_back = int(back_gap(state.pos[i], state.length[i], fol, state.pos, R))
    tk, tm, ts = attrs(int(lead))
    return NeighborView(
        d=d, leader_id=j, leader_speed=int(state.speed[j]), leader_gap=d_l,
        leader_kind=lk, leader_mode=lm, leader_train_size=ls,
        d_other=d_other, d_back=d_back, target_leader_id=int(lead),
        target_leader_kind=tk, target_leader_mode=tm, target_leader_train_size=ts,
    )
