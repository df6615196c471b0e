"""MAV operating modes and the train registry.

Modes move Independent -> Docking -> Collective and back.  Trains are kept
as front/back links between coupled modules plus a shared train id, so
reorganising after a detachment only rewires neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import (
    COLLECTIVE,
    DOCKING,
    INDEPENDENT,
    MAV,
    SimulationFault,
    compute_train_sizes,
    rear_gap,
    ring_gap,
    train_leader_of,
    train_size_of,
)
from .lanechange import LaneChangeDecision, Reason


@dataclass(frozen=True)
class Train:
    id: int
    member_ids: tuple
    lane: int

    @property
    def leader(self):
        return self.member_ids[0]

    @property
    def size(self):
        return len(self.member_ids)


@dataclass(frozen=True)
class DockingLink:
    follower_id: int
    target_id: int


class TrainRegistry:
    """Snapshot of every train in a state, keyed by train id."""

    def __init__(self, trains):
        self.trains = {t.id: t for t in trains}

    @classmethod
    def from_state(cls, state):
        trains = []
        leaders = np.flatnonzero((state.mode == COLLECTIVE) & (state.front < 0))
        for lead in leaders:
            members = [int(lead)]
            j = int(lead)
            while state.back[j] >= 0:
                j = int(state.back[j])
                members.append(j)
            trains.append(Train(int(state.train_id[lead]), tuple(members),
                                int(state.lane[lead])))
        return cls(trains)

    def __len__(self):
        return len(self.trains)

    def __iter__(self):
        return iter(self.trains.values())

    def sizes(self):
        return sorted(t.size for t in self)

    def links(self, state):
        return [DockingLink(int(i), int(state.target[i]))
                for i in np.flatnonzero(state.mode == DOCKING)]


@njit(cache=True, inline="always")
def trigger_ok(leader_kind, leader_mode, leader_train_size, l_max, docking_enabled):
    """Independent MAV may start docking onto its immediate same-lane leader."""
    if not docking_enabled or leader_kind != MAV:
        return False
    if leader_mode == INDEPENDENT:
        return 1 + 1 <= l_max
    if leader_mode == COLLECTIVE:
        return leader_train_size < l_max
    return False


def docking_trigger(leader_view, l_max, docking_enabled):
    """``leader_view`` is the follower's :class:`~mavsim.core.NeighborView`."""
    if leader_view.leader_id < 0:
        return False
    return bool(trigger_ok(leader_view.leader_kind, leader_view.leader_mode,
                           leader_view.leader_train_size, l_max, docking_enabled))


@njit(cache=True, inline="always")
def docking_speed(v, a_p, v_max, d, d_intra):
    return max(min(v + a_p, v_max, d - d_intra), 0)


@njit(cache=True, inline="always")
def must_abort(docking_on, target_id, leader_id, target_size, l_max):
    """A docking module stops if docking is off, its target is no longer its
    immediate leader, or the target's train is already full."""
    if not docking_on or target_id < 0:
        return True
    return leader_id != target_id or target_size >= l_max


@njit(cache=True)
def abort_pass(mode, target, lead, size, l_max, docking_on):
    """Drop every docking module whose docking must stop back to Independent."""
    for i in range(mode.shape[0]):
        if mode[i] != DOCKING:
            continue
        j = target[i]
        if j < 0 or must_abort(docking_on, j, lead[i], size[j], l_max):
            mode[i] = INDEPENDENT
            target[i] = -1


@njit(cache=True)
def couple(i, j, mode, train_id, front, back, target, next_train_id, l_max):
    """Attach follower ``i`` behind ``j``; returns the updated id counter."""
    if train_size_of(j, mode, front, back) + 1 > l_max:
        return -1
    if mode[j] == INDEPENDENT:
        mode[j] = COLLECTIVE
        train_id[j] = next_train_id
        next_train_id += 1
    front[i] = j
    back[j] = i
    train_id[i] = train_id[j]
    mode[i] = COLLECTIVE
    target[i] = -1
    return next_train_id


@njit(cache=True)
def mode_maintenance(kind, mode, speed, train_id, front, back, target, order,
                     starts, lead, gap, size, l_max, d_intra, docking_on,
                     next_train_id, would):
    """Aborts, then couplings front-to-back per lane, then new triggers.

    ``lead``/``gap`` describe the current positions and ``size`` the current
    train sizes; ``size`` is kept current through couplings.  ``would`` is a
    scratch array.  Returns the next free train id.

    Docking chains are allowed: a module may dock onto a module that is
    itself docking, and couples only once its target has coupled.  A target
    train that filled up earlier in the same pass aborts the follower.
    """
    n = kind.shape[0]
    abort_pass(mode, target, lead, size, l_max, docking_on)
    n_lanes = starts.shape[0] - 1
    for ln in range(n_lanes):
        s = starts[ln]
        e = starts[ln + 1]
        # start just behind a non-docking module so every chain is visited
        # head first; a lane with only docking modules cannot occur
        k0 = e - 1
        for k in range(e - 1, s - 1, -1):
            if mode[order[k]] != DOCKING:
                k0 = k
                break
        m = e - s
        for step in range(m):
            k = k0 - step
            if k < s:
                k += m
            i = order[k]
            if mode[i] != DOCKING:
                continue
            j = target[i]
            if mode[j] == DOCKING or gap[i] != d_intra or speed[i] != speed[j]:
                continue
            if size[j] >= l_max:
                mode[i] = INDEPENDENT
                target[i] = -1
                continue
            next_train_id = couple(i, j, mode, train_id, front, back, target,
                                   next_train_id, l_max)
            t = train_leader_of(j, front)
            grown = size[j] + 1 if mode[j] == COLLECTIVE and size[j] > 1 else 2
            while t >= 0:
                size[t] = grown
                t = back[t]
    if not docking_on:
        return next_train_id
    for ln in range(n_lanes):
        s = starts[ln]
        e = starts[ln + 1]
        all_would = e - s > 1
        for k in range(s, e):
            i = order[k]
            would[i] = False
            if kind[i] != MAV or mode[i] != INDEPENDENT:
                continue
            j = lead[i]
            if j == i:
                continue
            would[i] = trigger_ok(kind[j], mode[j], size[j], l_max, True)
        for k in range(s, e):
            if not would[order[k]]:
                all_would = False
                break
        if all_would:
            # a ring made only of would-be dockers has no head; keep one free
            would[order[s]] = False
        for k in range(s, e):
            i = order[k]
            if would[i]:
                mode[i] = DOCKING
                target[i] = lead[i]
    return next_train_id


@njit(cache=True)
def detach_kernel(mode, lane, pos, speed, length, front, back, olead, ofol,
                  road_length, a, v_max, v_max_mav, p_d, draws, out_lane):
    """Front-most module per train with draw < p_d and a safe target lane.

    Besides the rear gap, the target lane needs the same room ahead as an
    ordinary lane change (gap above min(v + a, v_max_mav)).
    """
    n = mode.shape[0]
    for lead in range(n):
        if mode[lead] != COLLECTIVE or front[lead] >= 0:
            continue
        m = lead
        while m >= 0:
            if draws[m] < p_d:
                lo = olead[m]
                if lo < 0:
                    ok = True
                else:
                    ok = (rear_gap(pos[m], length[m], pos[ofol[m]], road_length) > v_max
                          and ring_gap(pos[m], pos[lo], length[lo], road_length)
                          > min(speed[m] + a, v_max_mav))
                if ok:
                    out_lane[m] = 1 - lane[m]
                    break
            m = back[m]


@njit(cache=True)
def reorganize(m, mode, train_id, front, back, next_train_id):
    """Remove module ``m`` from its train and split the remainder.

    The segment in front of ``m`` keeps the train id; the segment behind it
    becomes a new train (or keeps the id if ``m`` was the leader).  Segments
    of one module fall back to Independent.  Returns the id counter.
    """
    f = front[m]
    b = back[m]
    old = train_id[m]
    front[m] = -1
    back[m] = -1
    train_id[m] = -1
    mode[m] = INDEPENDENT
    if f >= 0:
        back[f] = -1
        lead = train_leader_of(f, front)
        if back[lead] < 0:
            mode[lead] = INDEPENDENT
            train_id[lead] = -1
    if b >= 0:
        front[b] = -1
        if back[b] < 0:
            mode[b] = INDEPENDENT
            train_id[b] = -1
        else:
            tid = old
            if f >= 0:
                tid = next_train_id
                next_train_id += 1
            j = b
            while j >= 0:
                train_id[j] = tid
                j = back[j]
    return next_train_id


def docking_abort_check(state, vehicle_id, params, docking_enabled=True):
    """Apply the abort rule to one docking module; True if it aborted."""
    i = int(vehicle_id)
    if state.mode[i] != DOCKING:
        raise ValueError(f"vehicle {i} is not docking")
    state.reindex()
    lead, _, _, _, size = state.neighbors()
    j = int(state.target[i])
    stop = bool(j < 0 or must_abort(bool(docking_enabled), j, int(lead[i]),
                                    int(size[j]), params.l_max))
    if stop:
        state.mode[i] = INDEPENDENT
        state.target[i] = -1
    return stop


def docking_complete_check(state, vehicle_id, params):
    """Couple a docking module whose gap and speed match its target."""
    i = int(vehicle_id)
    if state.mode[i] != DOCKING:
        raise ValueError(f"vehicle {i} is not docking")
    j = int(state.target[i])
    gap = ring_gap(state.pos[i], state.pos[j], state.length[j], state.road_length)
    if (state.mode[j] == DOCKING or gap != params.d_intra
            or state.speed[i] != state.speed[j]):
        return False
    size = train_size_of(j, state.mode, state.front, state.back)
    if size >= params.l_max:
        raise SimulationFault(f"coupling {i} behind {j} would exceed l_max")
    nxt = couple(i, j, state.mode, state.train_id, state.front, state.back,
                 state.target, state.next_train_id, params.l_max)
    state.next_train_id = int(nxt)
    return True


def collective_speeds(state, train, params):
    """New speed of every member: the leader's deterministic speed, no noise."""
    from .tsm import speed_decision

    lead = train.leader
    state.reindex()
    j = state.leader(lead)
    R = state.road_length
    d = int(ring_gap(state.pos[lead], state.pos[j], state.length[j], R))
    d_l = leader_gap_for_anticipation(state, j)
    dec = speed_decision(int(state.speed[lead]), d, int(state.speed[j]), d_l,
                         params, v_eff_max=params.v_max_mav)
    return {m: dec.v_det for m in train.member_ids}


def leader_gap_for_anticipation(state, j):
    """Gap in front of ``j``; a train member reports its train's front gap."""
    if state.mode[j] == COLLECTIVE:
        j = int(train_leader_of(j, state.front))
    k = state.leader(j)
    return int(ring_gap(state.pos[j], state.pos[k], state.length[k], state.road_length))


def detachment_decisions(state, params, rng):
    """Detachment lane changes; one draw per vehicle id, ascending."""
    state.reindex()
    n = len(state)
    draws = rng.random(n)
    out_lane = np.full(n, -1, np.int64)
    _, _, olead, ofol, _ = state.neighbors()
    detach_kernel(state.mode, state.lane, state.pos, state.speed, state.length,
                  state.front, state.back, olead, ofol, state.road_length,
                  params.a, params.v_max,
                  params.v_max_mav, params.p_d, draws, out_lane)
    return [LaneChangeDecision(int(i), int(state.lane[i]), int(out_lane[i]),
                               Reason.DETACHMENT)
            for i in np.flatnonzero(out_lane >= 0)]


def reorganize_after_detach(state, vehicle_id):
    """Split ``vehicle_id``'s train around it; returns the new registry."""
    i = int(vehicle_id)
    if state.mode[i] != COLLECTIVE:
        raise ValueError(f"vehicle {i} is not in a train")
    state.next_train_id = int(reorganize(i, state.mode, state.train_id, state.front,
                                         state.back, state.next_train_id))
    return TrainRegistry.from_state(state)
