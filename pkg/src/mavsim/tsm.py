"""Two-state safe-speed (TSM) car-following rules.

Pure functions on integer cell quantities.  They are numba-compiled so the
engine kernel calls exactly the same code as the unit tests.  The time gap
``T`` enters as an exact fraction ``t_num / t_den`` in the compiled helpers;
the float-``T`` wrappers below convert once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from numba import njit


@dataclass(frozen=True)
class SpeedDecision:
    v_det: int
    b_rand: int
    p: float
    v_final: int


@njit(cache=True, inline="always")
def anticipated_leader_speed(d_l, v_l, a, v_max):
    return min(d_l, v_l + a, v_max)


@njit(cache=True, inline="always")
def anticipated_gap(d, v_anti, g_safety):
    return d + max(v_anti - g_safety, 0)


@njit(cache=True, inline="always")
def safe_speed(v_l, d, b_max):
    """Gipps safe speed, rounded half away from zero.

    The square root argument is at least ``b_max**2`` so the result is
    non-negative and ``floor(x + 0.5)`` is the correct rounding.
    """
    x = -b_max + math.sqrt(b_max * b_max + v_l * v_l + 2 * b_max * d)
    return int(math.floor(x + 0.5))


@njit(cache=True, inline="always")
def deterministic_speed(v, a, v_eff_max, d_anti, v_safe):
    return min(v + a, v_eff_max, d_anti, v_safe)


@njit(cache=True, inline="always")
def randomization_deceleration_exact(v, d_anti, t_num, t_den, a, b_defense):
    # floor(d_anti / T) with T = t_num / t_den
    if v < b_defense + (d_anti * t_den) // t_num:
        return a
    return b_defense


@njit(cache=True, inline="always")
def randomization_probability_exact(v, d_anti, t_num, t_den, p_a, p_b, p_c, v_c, alpha):
    if v == 0:
        return p_b
    # v <= d_anti / T, compared without division
    if v * t_num <= d_anti * t_den:
        return p_c
    return p_c + p_a / (1.0 + math.exp(alpha * (v_c - v)))


@njit(cache=True, inline="always")
def apply_stochastic_deceleration(v_det, b_rand, p, random_draw):
    if random_draw < p:
        return max(v_det - b_rand, 0)
    return v_det


@njit(cache=True)
def advance_position(x, v_final, road_length):
    return (x + v_final) % road_length


def _t_fraction(T):
    f = Fraction(T).limit_denominator(10_000)
    return f.numerator, f.denominator


def randomization_deceleration(v, d_anti, T, a, b_defense):
    t_num, t_den = _t_fraction(T)
    return randomization_deceleration_exact(v, d_anti, t_num, t_den, a, b_defense)


def randomization_probability(v, d_anti, T, params):
    """Randomization probability; ``params`` needs p_a, p_b, p_c, v_c, alpha."""
    t_num, t_den = _t_fraction(T)
    return randomization_probability_exact(
        v, d_anti, t_num, t_den,
        float(params.p_a), float(params.p_b), float(params.p_c),
        float(params.v_c), float(params.alpha),
    )


@njit(cache=True, inline="always")
def tsm_speed(v, d, v_l, d_l, v_eff_max, stochastic, draw,
              a, v_max, b_max, g_safety, b_defense, t_num, t_den,
              p_a, p_b, p_c, v_c, alpha):
    """Full speed update for one vehicle.

    Returns (v_det, b_rand, p, v_final).  With ``stochastic`` false the
    randomization step is skipped and ``v_final == v_det``.
    """
    v_anti = anticipated_leader_speed(d_l, v_l, a, v_max)
    d_anti = anticipated_gap(d, v_anti, g_safety)
    v_safe = safe_speed(v_l, d, b_max)
    v_det = deterministic_speed(v, a, v_eff_max, d_anti, v_safe)
    if v_det < 0:
        v_det = 0
    b_rand = randomization_deceleration_exact(v, d_anti, t_num, t_den, a, b_defense)
    p = randomization_probability_exact(v, d_anti, t_num, t_den, p_a, p_b, p_c, v_c, alpha)
    if stochastic:
        v_final = apply_stochastic_deceleration(v_det, b_rand, p, draw)
    else:
        v_final = v_det
    return v_det, b_rand, p, v_final


def speed_decision(v, d, v_l, d_l, params, v_eff_max=None, draw=None):
    """Evaluate the full rule chain for one vehicle with explicit inputs.

    ``draw=None`` skips the stochastic step (MAV behaviour).
    """
    t_num, t_den = params.t_fraction
    v_det, b_rand, p, v_final = tsm_speed(
        v, d, v_l, d_l, params.v_max if v_eff_max is None else v_eff_max,
        draw is not None, 0.0 if draw is None else draw,
        params.a, params.v_max, params.b_max, params.g_safety, params.b_defense,
        t_num, t_den, params.p_a, params.p_b, params.p_c, float(params.v_c),
        params.alpha,
    )
    return SpeedDecision(v_det=int(v_det), b_rand=int(b_rand), p=float(p),
                         v_final=int(v_final))
