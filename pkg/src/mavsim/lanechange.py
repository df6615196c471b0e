"""Symmetric lane changing for conventional vehicles and independent MAVs.

Decisions are collected from a frozen state and applied together.  Moves are
purely lateral, so a changer occupies the same longitudinal cells on its new
lane that it vacated on the old one.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
from numba import njit

from .core import (
    COLLECTIVE,
    CONVENTIONAL,
    INDEPENDENT,
    MAV,
    SimulationFault,
    rear_gap,
    ring_gap,
)

NO_CHANGE = 0
GAP_INCENTIVE = 1
MAV_JOIN_INCENTIVE = 2
DETACHMENT = 3


class Reason(IntEnum):
    GAP_INCENTIVE = GAP_INCENTIVE
    MAV_JOIN_INCENTIVE = MAV_JOIN_INCENTIVE
    DETACHMENT = DETACHMENT


@dataclass(frozen=True)
class LaneChangeDecision:
    vehicle_id: int
    from_lane: int
    to_lane: int
    reason: Reason

    def __post_init__(self):
        if self.from_lane == self.to_lane:
            raise ValueError("a lane change needs two different lanes")


@njit(cache=True, inline="always")
def incentive_gap(d_current, d_other, v, a, v_eff_max):
    bound = min(v + a, v_eff_max)
    return d_current < bound and d_other > bound


@njit(cache=True, inline="always")
def incentive_mav_join(current_leader_kind, target_leader_kind):
    return current_leader_kind == CONVENTIONAL and target_leader_kind == MAV


@njit(cache=True, inline="always")
def safety_back(d_back, v_max):
    return d_back > v_max


@njit(cache=True)
def collect_kernel(kind, mode, lane, pos, speed, length, lead, gap, olead, ofol,
                   road_length, a, v_max, v_max_mav, p_lc, join_enabled, draws,
                   out_lane, out_reason):
    """Fill ``out_lane``/``out_reason`` for conventional vehicles and
    independent MAVs; everyone else is left untouched."""
    n = kind.shape[0]
    for i in range(n):
        is_conv = kind[i] == CONVENTIONAL
        if not is_conv and mode[i] != INDEPENDENT:
            continue
        lo = olead[i]
        if lo < 0:
            d_other = road_length
            d_back = road_length
        else:
            d_other = ring_gap(pos[i], pos[lo], length[lo], road_length)
            d_back = rear_gap(pos[i], length[i], pos[ofol[i]], road_length)
        if not safety_back(d_back, v_max):
            continue
        v_eff = v_max if is_conv else v_max_mav
        bound = min(speed[i] + a, v_eff)
        j = lead[i]
        reason = NO_CHANGE
        if incentive_gap(gap[i], d_other, speed[i], a, v_eff):
            reason = GAP_INCENTIVE
        elif (not is_conv and join_enabled and j != i and lo >= 0
              and d_other > bound and incentive_mav_join(kind[j], kind[lo])):
            # the join replaces the "blocked here" clause only; the target
            # lane must still have room ahead
            reason = MAV_JOIN_INCENTIVE
        if reason != NO_CHANGE and draws[i] < p_lc:
            out_lane[i] = 1 - lane[i]
            out_reason[i] = reason


@njit(cache=True)
def overlap_free(pos, length, order, starts, road_length):
    """True when consecutive vehicles on every lane keep a gap >= 0."""
    for ln in range(starts.shape[0] - 1):
        s = starts[ln]
        e = starts[ln + 1]
        if e - s < 2:
            continue
        for k in range(s, e):
            i = order[k]
            j = order[k + 1] if k + 1 < e else order[s]
            if ring_gap(pos[i], pos[j], length[j], road_length) < 0:
                return False
    return True


def _decisions_from_arrays(state, out_lane, out_reason):
    ids = np.flatnonzero(out_lane >= 0)
    return [
        LaneChangeDecision(int(i), int(state.lane[i]), int(out_lane[i]),
                           Reason(int(out_reason[i])))
        for i in ids
    ]


def collect_decisions(state, params, rng, docking_enabled):
    """Gap- and join-incentive lane changes for one step.

    One uniform draw per vehicle (ids ascending) is taken from ``rng``
    whether or not the vehicle is eligible, so draw consumption does not
    depend on the traffic state.  Docking and collective modules never
    change lanes here; detachment lives in :mod:`mavsim.mav`.
    """
    state.reindex()
    n = len(state)
    draws = rng.random(n)
    out_lane = np.full(n, -1, np.int64)
    out_reason = np.zeros(n, np.int64)
    lead, gap, olead, ofol, _ = state.neighbors()
    collect_kernel(state.kind, state.mode, state.lane, state.pos, state.speed,
                   state.length, lead, gap, olead, ofol, state.road_length,
                   params.a, params.v_max, params.v_max_mav, params.p_lc,
                   bool(docking_enabled), draws, out_lane, out_reason)
    return _decisions_from_arrays(state, out_lane, out_reason)


def apply_decisions(state, decisions):
    """Move every decided vehicle to its target lane, then verify no overlap."""
    if not decisions:
        return state
    for dec in decisions:
        i = dec.vehicle_id
        if state.lane[i] != dec.from_lane:
            raise SimulationFault(f"vehicle {i} is not on lane {dec.from_lane}")
        if state.mode[i] == COLLECTIVE and dec.reason != Reason.DETACHMENT:
            raise SimulationFault(f"train module {i} cannot change lanes")
        state.lane[i] = dec.to_lane
    state.reindex()
    if not overlap_free(state.pos, state.length, state.order, state.starts,
                        state.road_length):
        raise SimulationFault("lane changes produced an overlap", state.dump())
    return state
