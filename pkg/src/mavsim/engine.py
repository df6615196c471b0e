"""Initialisation and the per-step update pipeline.

One step runs, in order:

1. MAV mode maintenance on the pre-step state (aborts, couplings, triggers);
2. lane changes and detachments collected from that frozen state and applied
   together, followed by train reorganisation and a docking re-check;
3. speeds for every vehicle using post-lane-change neighbours and current
   speeds;
4. synchronous position update;
5. invariant checks and per-step measurements.

Random numbers come from a single ``numpy.random.Generator`` (PCG64, 64-bit
seed).  Each step consumes one ``(3, n)`` block of uniforms: row 0 for lane
changes, row 1 for detachments, row 2 for stochastic deceleration, each
indexed by vehicle id.  :func:`run` draws blocks for many steps at once,
which yields the same stream as calling :func:`step` repeatedly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np
from numba import njit

from .core import (
    COLLECTIVE,
    CONVENTIONAL,
    DOCKING,
    INDEPENDENT,
    MAV,
    ConfigError,
    RoadState,
    SimulationFault,
    build_index,
    compute_neighbors,
    compute_train_sizes,
    reindex_after_lane_change,
    reindex_after_move,
    ring_gap,
    train_leader_of,
)
from .lanechange import collect_kernel, overlap_free
from .mav import abort_pass, detach_kernel, docking_speed, mode_maintenance, reorganize
from .tsm import tsm_speed

LOG = logging.getLogger(__name__)

OK = 0
FAULT_OVERLAP = 1
FAULT_TRAIN = 2
FAULT_SPEED = 3
FAULT_EARLY_MODE = 4
FAULT_COUPLING = 5
FAULT_MESSAGES = {
    FAULT_OVERLAP: "vehicles overlap",
    FAULT_TRAIN: "train invariant violated",
    FAULT_SPEED: "speed outside its mode's bound",
    FAULT_EARLY_MODE: "docking/collective mode before docking start",
    FAULT_COUPLING: "coupling would exceed l_max",
}


class ScenarioPhase(Enum):
    WARMUP_INDEPENDENT = "warmup_independent"
    OPERATIONAL = "operational"
    MEASURING = "measuring"


def phase_at(t, params):
    if t >= params.t_measure_start and t >= params.t_dock_start:
        return ScenarioPhase.MEASURING
    if t >= params.t_dock_start:
        return ScenarioPhase.OPERATIONAL
    return ScenarioPhase.WARMUP_INDEPENDENT


class KernelParams(NamedTuple):
    road_length: int
    n_lanes: int
    a: int
    v_max: int
    v_max_mav: int
    b_max: int
    b_defense: int
    g_safety: int
    t_num: int
    t_den: int
    p_a: float
    p_b: float
    p_c: float
    v_c: float
    alpha: float
    p_lc: float
    a_p: int
    d_intra: int
    p_d: float
    l_max: int
    t_dock_start: int
    docking_scenario: bool
    detach_interval: int


def kernel_params(params):
    t_num, t_den = params.t_fraction
    return KernelParams(
        int(params.road_length), int(params.lanes), int(params.a), int(params.v_max),
        int(params.v_max_mav), int(params.b_max), int(params.b_defense),
        int(params.g_safety), int(t_num), int(t_den), float(params.p_a),
        float(params.p_b), float(params.p_c), float(params.v_c), float(params.alpha),
        float(params.p_lc), int(params.a_p), int(params.d_intra), float(params.p_d),
        int(params.l_max), int(params.t_dock_start),
        bool(params.docking_enabled_scenario), int(params.detach_interval),
    )


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def init_state(params, rng):
    """Random placement of ``round(density * km)`` vehicles on each lane.

    The MAV share per lane is exactly ``round(p_mav * N)`` with kinds
    shuffled; gaps are a uniform random composition of the free cells, and
    the whole pattern is rotated by a uniform offset.  Speeds start at 0.
    """
    R = params.road_length
    n_lane = params.vehicles_per_lane
    kinds, lanes, pos, lengths = [], [], [], []
    for ln in range(params.lanes):
        n_mav = _round_half_up(params.p_mav * n_lane)
        kind = np.array([MAV] * n_mav + [CONVENTIONAL] * (n_lane - n_mav), np.int8)
        kind = rng.permutation(kind)
        length = np.where(kind == MAV, params.mav_length, params.veh_length)
        free = R - int(length.sum())
        if free < 0:
            raise ConfigError(f"density: {params.density} veh/km/lane does not fit")
        if n_lane == 0:
            continue
        cuts = np.sort(rng.choice(free + n_lane - 1, size=n_lane - 1, replace=False))
        bounds = np.concatenate(([-1], cuts, [free + n_lane - 1]))
        gaps = np.diff(bounds) - 1
        offset = int(rng.integers(R))
        # vehicle k's rear follows gap k
        fronts = offset + np.cumsum(gaps + length) - 1
        kinds.append(kind)
        lanes.append(np.full(n_lane, ln, np.int64))
        pos.append(fronts % R)
        lengths.append(length)
    if kinds:
        state = RoadState(np.concatenate(kinds), np.concatenate(lanes),
                          np.concatenate(pos), np.concatenate(lengths), R, params.lanes)
    else:
        empty = np.zeros(0, np.int64)
        state = RoadState(empty, empty, empty, empty, R, params.lanes)
    return state


@njit(cache=True)
def _check(kind, mode, lane, pos, speed, length, train_id, front, back, order,
           starts, kp, docking_started):
    R = kp.road_length
    if not overlap_free(pos, length, order, starts, R):
        return FAULT_OVERLAP
    n = kind.shape[0]
    for i in range(n):
        m = mode[i]
        if not docking_started and (m == DOCKING or m == COLLECTIVE):
            return FAULT_EARLY_MODE
        if speed[i] < 0:
            return FAULT_SPEED
        if kind[i] == CONVENTIONAL or m == DOCKING:
            if speed[i] > kp.v_max:
                return FAULT_SPEED
        elif speed[i] > kp.v_max_mav:
            return FAULT_SPEED
        if m == COLLECTIVE:
            f = front[i]
            if f >= 0:
                if (back[f] != i or lane[f] != lane[i] or speed[f] != speed[i]
                        or train_id[f] != train_id[i] or train_id[i] < 0
                        or ring_gap(pos[i], pos[f], length[f], R) != kp.d_intra):
                    return FAULT_TRAIN
            else:
                size = 1
                j = i
                while back[j] >= 0:
                    j = back[j]
                    size += 1
                if size < 2 or size > kp.l_max:
                    return FAULT_TRAIN
        elif front[i] >= 0 or back[i] >= 0 or train_id[i] >= 0:
            return FAULT_TRAIN
    return OK


class Workspace(NamedTuple):
    """Scratch arrays reused across steps."""
    new_speed: np.ndarray
    lc_lane: np.ndarray
    lc_reason: np.ndarray
    lead: np.ndarray
    gap: np.ndarray
    olead: np.ndarray
    ofol: np.ndarray
    size: np.ndarray
    would: np.ndarray


def make_workspace(n):
    ints = [np.zeros(n, np.int64) for _ in range(8)]
    return Workspace(*ints, np.zeros(n, np.bool_))


@njit(cache=True)
def step_kernel(kind, mode, lane, pos, speed, length, train_id, front, back,
                target, order, keys, starts, rank, kp, draws, t, next_train_id, ws):
    """Advance the state by one step.

    ``order``/``keys``/``starts``/``rank`` must describe the pre-step state
    and are kept current in place.  Returns (fault code, next train id, number
    of speeds cut by the no-overlap guard).
    """
    n = kind.shape[0]
    R = kp.road_length
    docking_on = kp.docking_scenario and t >= kp.t_dock_start
    new_speed = ws.new_speed
    lc_lane = ws.lc_lane
    lead = ws.lead
    gap = ws.gap
    size = ws.size
    compute_neighbors(order, starts, lane, pos, length, R, lead, gap, ws.olead, ws.ofol)
    compute_train_sizes(mode, front, back, size)

    # (1) mode maintenance on the pre-step state
    next_train_id = mode_maintenance(kind, mode, speed, train_id, front, back, target,
                                     order, starts, lead, gap, size, kp.l_max,
                                     kp.d_intra, docking_on, next_train_id,
                                     ws.would)

    # (2) lane changes and detachments from the frozen state
    for i in range(n):
        lc_lane[i] = -1
        ws.lc_reason[i] = 0
    collect_kernel(kind, mode, lane, pos, speed, length, lead, gap, ws.olead, ws.ofol,
                   R, kp.a, kp.v_max, kp.v_max_mav, kp.p_lc, docking_on,
                   draws[0], lc_lane, ws.lc_reason)
    if t % kp.detach_interval == 0:
        detach_kernel(mode, lane, pos, speed, length, front, back, ws.olead, ws.ofol,
                      R, kp.a, kp.v_max, kp.v_max_mav, kp.p_d, draws[1], lc_lane)
    changed = False
    for i in range(n):
        if lc_lane[i] >= 0:
            changed = True
            lane[i] = lc_lane[i]
            if mode[i] == COLLECTIVE:
                next_train_id = reorganize(i, mode, train_id, front, back,
                                           next_train_id)
    if changed:
        reindex_after_lane_change(order, keys, starts, rank, lane, pos, R)
        compute_neighbors(order, starts, lane, pos, length, R, lead, gap,
                          ws.olead, ws.ofol)
        compute_train_sizes(mode, front, back, size)
    abort_pass(mode, target, lead, size, kp.l_max, docking_on)

    # (3) speeds
    for i in range(n):
        m = mode[i]
        if m == DOCKING or (m == COLLECTIVE and front[i] >= 0):
            continue
        j = lead[i]
        # a train moves rigidly, so the gap that limits a module is its train's
        jl = j
        if mode[jl] == COLLECTIVE:
            jl = train_leader_of(jl, front)
        conv = kind[i] == CONVENTIONAL
        v_eff = kp.v_max if conv else kp.v_max_mav
        res = tsm_speed(speed[i], gap[i], speed[j], gap[jl], v_eff, conv, draws[2, i],
                        kp.a, kp.v_max, kp.b_max, kp.g_safety, kp.b_defense,
                        kp.t_num, kp.t_den, kp.p_a, kp.p_b, kp.p_c, kp.v_c, kp.alpha)
        new_speed[i] = res[3]
    for i in range(n):
        if mode[i] == COLLECTIVE and front[i] < 0:
            j = back[i]
            while j >= 0:
                new_speed[j] = new_speed[i]
                j = back[j]
    # docking modules go head first along each docking chain, so a target's
    # advance this step is already known (every target is the leader)
    for ln in range(kp.n_lanes):
        s = starts[ln]
        e = starts[ln + 1]
        k0 = e - 1
        for k in range(e - 1, s - 1, -1):
            if mode[order[k]] != DOCKING:
                k0 = k
                break
        m = e - s
        for st in range(m):
            k = k0 - st
            if k < s:
                k += m
            i = order[k]
            if mode[i] == DOCKING:
                new_speed[i] = docking_speed(speed[i], kp.a_p, kp.v_max,
                                             gap[i] + new_speed[target[i]],
                                             kp.d_intra)

    # no-overlap guard: nobody may advance past where its leader's rear
    # will be; walk each lane front to back until nothing changes
    guarded = 0
    again = True
    while again:
        again = False
        for ln in range(kp.n_lanes):
            for k in range(starts[ln + 1] - 1, starts[ln] - 1, -1):
                i = order[k]
                j = lead[i]
                if j == i:
                    continue
                room = gap[i] + new_speed[j]
                if new_speed[i] > room:
                    new_speed[i] = max(room, 0)
                    guarded += 1
                    again = True

    # (4) positions
    for i in range(n):
        speed[i] = new_speed[i]
        pos[i] = (pos[i] + new_speed[i]) % R

    # (5) checks
    if not reindex_after_move(order, keys, starts, rank, lane, pos, R):
        return FAULT_OVERLAP, next_train_id, guarded
    # trains may outlive a disabled docking phase, so only time is checked
    code = _check(kind, mode, lane, pos, speed, length, train_id, front, back,
                  order, starts, kp, t >= kp.t_dock_start)
    return code, next_train_id, guarded


@njit(cache=True)
def run_steps(kind, mode, lane, pos, speed, length, train_id, front, back, target,
              kp, draws, t0, next_train_id, ws, speed_sum, n_indep, n_dock, n_coll,
              guarded):
    """Run ``draws.shape[0]`` steps starting at time ``t0``.

    Per-step sums of speed, MAV mode counts and no-overlap guard activations
    are written into the output arrays.  Returns (fault code, steps
    completed, next train id).
    """
    n = kind.shape[0]
    order, keys, starts, rank = build_index(lane, pos, kp.road_length, kp.n_lanes)
    for s in range(draws.shape[0]):
        code, next_train_id, g = step_kernel(kind, mode, lane, pos, speed, length,
                                             train_id, front, back, target, order,
                                             keys, starts, rank, kp, draws[s],
                                             t0 + s, next_train_id, ws)
        guarded[s] = g
        total = 0
        ni = 0
        nd = 0
        nc = 0
        for i in range(n):
            total += speed[i]
            if mode[i] == INDEPENDENT:
                ni += 1
            elif mode[i] == DOCKING:
                nd += 1
            elif mode[i] == COLLECTIVE:
                nc += 1
        speed_sum[s] = total
        n_indep[s] = ni
        n_dock[s] = nd
        n_coll[s] = nc
        if code != OK:
            return code, s, next_train_id
    return OK, draws.shape[0], next_train_id


def _advance(state, params, draws):
    k = draws.shape[0]
    speed_sum = np.zeros(k, np.int64)
    counts = [np.zeros(k, np.int64) for _ in range(4)]
    code, done, nxt = run_steps(
        state.kind, state.mode, state.lane, state.pos, state.speed, state.length,
        state.train_id, state.front, state.back, state.target, kernel_params(params),
        draws, state.time, state.next_train_id, make_workspace(len(state)),
        speed_sum, *counts,
    )
    state.next_train_id = int(nxt)
    if code != OK:
        state.time += done
        state.reindex()
        raise SimulationFault(
            f"step {state.time}: {FAULT_MESSAGES[code]}", state.dump()
        )
    state.time += k
    state.reindex()
    return speed_sum, counts


def step(state, params, rng):
    """Advance ``state`` in place by one step and return it."""
    draws = rng.random((1, 3, len(state)))
    _advance(state, params, draws)
    return state


def step_with_draws(state, params, draws):
    """Advance one step using explicit uniforms of shape ``(3, n)``.

    Row 0 feeds lane changes, row 1 detachments, row 2 stochastic
    deceleration; useful for scripted scenarios.
    """
    draws = np.asarray(draws, dtype=np.float64)
    if draws.shape != (3, len(state)):
        raise ValueError(f"draws must have shape (3, {len(state)})")
    _advance(state, params, draws[None])
    return state


@dataclass
class RunOutput:
    params: object
    flow: np.ndarray
    mean_speed: np.ndarray
    frac_independent_or_docking: np.ndarray
    frac_collective: np.ndarray
    n_independent: np.ndarray
    n_docking: np.ndarray
    n_collective: np.ndarray
    guarded: np.ndarray
    histogram: object
    summary: object
    final_state: RoadState = field(repr=False)

    @property
    def t(self):
        return np.arange(len(self.flow))


def run(params, scenario=None, chunk=500):
    """Execute ``t_total`` steps from a fresh seeded state.

    Series entry ``t`` describes the state after step ``t`` has been applied.
    The train-size histogram samples the state at every multiple of
    ``hist_interval`` inside ``[t_measure_start, t_total]``.
    """
    from .metrics import TrainHistogram, sample_train_histogram, summarize_run

    if params.t_measure_start >= params.t_total:
        raise ConfigError("t_measure_start: must be below t_total")
    rng = np.random.default_rng(params.seed)
    state = init_state(params, rng)
    n = len(state)
    T = params.t_total
    speed_sum = np.zeros(T, np.int64)
    counts = np.zeros((4, T), np.int64)
    hist = TrainHistogram(params.l_max)
    first = -(-params.t_measure_start // params.hist_interval) * params.hist_interval
    sample_times = set(range(first, T + 1, params.hist_interval))
    stops = sorted(sample_times | set(range(chunk, T, chunk)) | {T})
    if 0 in sample_times:
        sample_train_histogram(state, hist)
    for stop in stops:
        k = stop - state.time
        if k <= 0:
            continue
        t0 = state.time
        draws = rng.random((k, 3, n))
        s, c = _advance(state, params, draws)
        speed_sum[t0:stop] = s
        for r in range(4):
            counts[r, t0:stop] = c[r]
        if state.time in sample_times:
            sample_train_histogram(state, hist)

    cell = params.cell_length
    km_lanes = params.road_length_km * params.lanes
    density = n / km_lanes if km_lanes > 0 else 0.0
    mean_speed = speed_sum * cell / n if n else np.zeros(T)
    flow = density * mean_speed * 3.6
    n_mav = int((state.kind == MAV).sum())
    if n_mav:
        frac_id = (counts[0] + counts[1]) / n_mav
        frac_c = counts[2] / n_mav
    else:
        frac_id = np.zeros(T)
        frac_c = np.zeros(T)
    summary = summarize_run(flow, mean_speed, params, scenario=scenario,
                            density=density)
    return RunOutput(
        params=params, flow=flow, mean_speed=mean_speed,
        frac_independent_or_docking=frac_id, frac_collective=frac_c,
        n_independent=counts[0], n_docking=counts[1], n_collective=counts[2],
        guarded=counts[3],
        histogram=hist, summary=summary, final_state=state,
    )
