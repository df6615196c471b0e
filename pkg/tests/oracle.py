"""Straight-line reference evaluators for the rule functions.

Written independently of the package from the published formulas, in plain
Python with exact arithmetic (Fraction/Decimal) so the compiled kernels can be
compared against them value by value.
"""

import math
from decimal import ROUND_HALF_UP, Decimal, getcontext
from fractions import Fraction

getcontext().prec = 50

DEFAULTS = dict(
    v_max=66, v_max_mav=61, a=2, b_max=6, b_defense=2, g_safety=20, T=Fraction(9, 5),
    p_a=0.85, p_b=0.52, p_c=0.1, v_c=30, alpha=10.0, p_lc=0.2, a_p=2, d_intra=0,
    p_d=0.2, l_max=5,
)


def v_anti(d_l, v_l, a=2, v_max=66):
    return min(d_l, v_l + a, v_max)


def d_anti(d, va, g_safety=20):
    return d + max(va - g_safety, 0)


def v_safe(v_l, d, b_max=6):
    root = (Decimal(b_max * b_max + v_l * v_l + 2 * b_max * d)).sqrt()
    return int((root - b_max).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def v_det(v, a, v_eff, da, vs):
    return min(v + a, v_eff, da, vs)


def b_rand(v, da, T=Fraction(9, 5), a=2, b_defense=2):
    return a if v < b_defense + math.floor(Fraction(da) / Fraction(T)) else b_defense


def p_rand(v, da, T=Fraction(9, 5), p_a=0.85, p_b=0.52, p_c=0.1, v_c=30, alpha=10.0):
    if v == 0:
        return p_b
    if Fraction(v) <= Fraction(da) / Fraction(T):
        return p_c
    return p_c + p_a / (1 + math.exp(alpha * (v_c - v)))


def stochastic(vd, b, p, draw):
    return max(vd - b, 0) if draw < p else vd


def follower_speed(v, d, v_l, d_l, v_eff=66, draw=None, **kw):
    """Full conventional (draw given) or MAV (draw None) speed update."""
    k = {**DEFAULTS, **kw}
    va = v_anti(d_l, v_l, k["a"], k["v_max"])
    da = d_anti(d, va, k["g_safety"])
    vd = max(v_det(v, k["a"], v_eff, da, v_safe(v_l, d, k["b_max"])), 0)
    if draw is None:
        return vd
    b = b_rand(v, da, k["T"], k["a"], k["b_defense"])
    p = p_rand(v, da, k["T"], k["p_a"], k["p_b"], k["p_c"], k["v_c"], k["alpha"])
    return stochastic(vd, b, p, draw)


def docking_speed(v, a_p, v_max, d, d_intra):
    return max(min(v + a_p, v_max, d - d_intra), 0)


def gap_incentive(d, d_other, v, a, v_eff):
    bound = min(v + a, v_eff)
    return d < bound and d_other > bound


# -- brute-force geometry ---------------------------------------------------------

def brute_neighbors(lane, pos, length, R):
    """O(n^2) scan: same-lane leader/gap and other-lane leader/follower.

    The other-lane leader is the vehicle whose front is strictly ahead at the
    smallest ring distance; the follower is the one at or behind at the
    smallest distance.  Empty other lane gives -1.
    """
    n = len(lane)
    lead, gap, olead, ofol = [-1] * n, [0] * n, [-1] * n, [-1] * n
    for i in range(n):
        best = None
        for j in range(n):
            if lane[j] != lane[i]:
                continue
            delta = (pos[j] - pos[i]) % R
            if delta == 0:
                delta = R  # itself (or the lone-vehicle convention)
            if best is None or delta < best[0] or (delta == best[0] and j == i):
                best = (delta, j)
        lead[i] = best[1]
        gap[i] = best[0] - length[best[1]]
        ahead = behind = None
        for j in range(n):
            if lane[j] == lane[i]:
                continue
            fwd = (pos[j] - pos[i]) % R
            if fwd > 0 and (ahead is None or fwd < ahead[0]):
                ahead = (fwd, j)
            back = (pos[i] - pos[j]) % R
            if behind is None or back < behind[0]:
                behind = (back, j)
        if ahead is None and behind is not None:
            # every other-lane vehicle sits at our exact cell: it is both
            ahead = (R, behind[1])
        if behind is not None:
            olead[i] = ahead[1]
            ofol[i] = behind[1]
    return lead, gap, olead, ofol


def occupied_cells(pos, length, R):
    return {(pos - k) % R for k in range(length)}


def overlaps(lane, pos, length, R):
    seen = {}
    for i in range(len(lane)):
        for c in occupied_cells(pos[i], length[i], R):
            key = (lane[i], c)
            if key in seen:
                return True
            seen[key] = i
    return False


# -- reference step for conventional-only traffic -----------------------------------

def conventional_step(lane, pos, speed, length, R, draws, **kw):
    """One synchronous step: lane changes on the frozen state (draw row 0),
    then speeds on the new lanes (row 2), then a no-overlap clamp and moves.
    Returns new (lane, pos, speed) lists."""
    k = {**DEFAULTS, **kw}
    n = len(lane)
    lead, gap, olead, ofol = brute_neighbors(lane, pos, length, R)
    new_lane = list(lane)
    for i in range(n):
        if olead[i] < 0:
            d_other = d_back = R
        else:
            j, f = olead[i], ofol[i]
            fwd = (pos[j] - pos[i]) % R or R
            d_other = fwd - length[j]
            d_back = (pos[i] - pos[f]) % R - length[i]
        if (d_back > k["v_max"] and gap_incentive(gap[i], d_other, speed[i], k["a"], k["v_max"])
                and draws[0][i] < k["p_lc"]):
            new_lane[i] = 1 - lane[i]
    lead, gap, _, _ = brute_neighbors(new_lane, pos, length, R)
    new_speed = [
        follower_speed(speed[i], gap[i], speed[lead[i]], gap[lead[i]], draw=draws[2][i], **kw)
        for i in range(n)
    ]
    changed = True
    while changed:
        changed = False
        for i in range(n):
            if lead[i] != i and new_speed[i] > gap[i] + new_speed[lead[i]]:
                new_speed[i] = max(gap[i] + new_speed[lead[i]], 0)
                changed = True
    new_pos = [(pos[i] + new_speed[i]) % R for i in range(n)]
    return new_lane, new_pos, new_speed
