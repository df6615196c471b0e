"""Acceptance criteria at full scale (12,000 steps on the 10 km ring).

The grid runs densities 5..70 veh/km/lane in steps of 5 plus 90, for the
base case and both MAV scenarios at p_mav 0.25/0.5/0.75, three seeds per
point, with the same hashed per-point seeds the ``sweep`` command uses.
Results are cached under ``.acceptance_cache/`` keyed by a hash of the
package sources, so a rerun without code changes only re-evaluates the
criteria.  Set ``MAVSIM_ACCEPTANCE_FRESH=1`` to force fresh runs.

Every criterion records one verdict line that is printed in the pytest
terminal summary.
"""

import hashlib
import json
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from mavsim import Kind, run
from mavsim.cli import main, parse_config, resolve_workers
from mavsim.metrics import TrainHistogram

ROOT = Path(__file__).resolve().parents[1]
CACHE = ROOT / ".acceptance_cache"
DENSITIES = [float(d) for d in range(5, 75, 5)] + [90.0]
P_VALUES = [0.25, 0.5, 0.75]
GRID = {"densities": DENSITIES, "p_mav_values": P_VALUES,
        "scenarios": ["base", "independent", "collective"], "seeds_per_point": 3, "seed": 0}
NOISE = 0.02

pytestmark = pytest.mark.acceptance


def _source_hash():
    h = hashlib.sha256(json.dumps(GRID, sort_keys=True).encode())
    for path in sorted((ROOT / "src" / "mavsim").glob("*.py")):
        h.update(path.read_bytes())
    return h.hexdigest()[:16]


def _run_one(job):
    params, point = job
    out = run(params, scenario=point.scenario)
    n_mav = int((out.final_state.kind == Kind.MAV).sum())
    modes = out.n_independent + out.n_docking + out.n_collective
    return {
        "scenario": point.scenario, "p_mav": point.p_mav, "density": point.density,
        "replicate": point.replicate, "seed": point.seed,
        "flow": out.summary.mean_flow, "speed": out.summary.mean_speed,
        "hist": {str(k): int(v) for k, v in out.histogram.counts.items()},
        "flow_3000_5000": float(out.flow[3000:5000].mean()),
        "flow_6000_8000": float(out.flow[6000:8000].mean()),
        "frac_collective_ss": float(out.frac_collective[params.t_measure_start:].mean()),
        "frac_independent_ss": float(out.frac_independent_or_docking[params.t_measure_start:].mean()),
        "early_modes": int((out.n_docking[:params.t_dock_start] + out.n_collective[:params.t_dock_start]).sum()),
        "conserved": bool(len(out.final_state) == round(params.density * params.road_length_km) * 2
                          and (modes == n_mav).all()),
        "guarded": int(out.guarded.sum()),
    }


@pytest.fixture(scope="module")
def results():
    cfg = parse_config(GRID)
    path = CACHE / f"{_source_hash()}.json"
    if path.exists() and not os.environ.get("MAVSIM_ACCEPTANCE_FRESH"):
        return json.loads(path.read_text())
    jobs = [(cfg.params_for(p), p) for p in cfg.points()]
    workers = resolve_workers(None)
    if workers == 1:
        rows = [_run_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_one, jobs, chunksize=1))
    CACHE.mkdir(exist_ok=True)
    path.write_text(json.dumps(rows))
    return rows


def verdict(number, ok, detail):
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})"
    return ok


def select(rows, scenario, p_mav=None, density=None):
    return [r for r in rows if r["scenario"] == scenario
            and (p_mav is None or r["p_mav"] == p_mav)
            and (density is None or r["density"] == density)]


def mean_curve(rows, key="flow"):
    by_d = defaultdict(list)
    for r in rows:
        by_d[r["density"]].append(r[key])
    return {d: float(np.mean(v)) for d, v in sorted(by_d.items())}


def curve(rows, scenario, p_mav):
    if scenario == "base" or p_mav == 0:
        return mean_curve(select(rows, "base"))
    return mean_curve(select(rows, scenario, p_mav))


def test_1_capacity_doubling(results):
    ratios = []
    for rep in range(3):
        base = max(r["flow"] for r in select(results, "base") if r["replicate"] == rep)
        coll = max(r["flow"] for r in select(results, "collective", 0.75) if r["replicate"] == rep)
        ratios.append(coll / base)
    ratio = float(np.mean(ratios))
    ok = verdict(1, 1.6 <= ratio <= 2.4,
                 f"capacity ratio {ratio:.3f}, per seed {', '.join(f'{x:.3f}' for x in ratios)}; "
                 f"need [1.6, 2.4]")
    assert ok


def test_2_monotone_capacity(results):
    caps = [max(curve(results, "collective", p).values()) for p in [0.0] + P_VALUES]
    ok = all(b >= a * (1 - NOISE) for a, b in zip(caps, caps[1:]))
    verdict(2, ok, "capacities " + ", ".join(f"{c:.0f}" for c in caps)
            + " veh/h/lane at p_mav 0/0.25/0.5/0.75")
    assert ok


def test_3_free_flow_speed(results):
    speeds = {("base", 0.0): mean_curve(select(results, "base"), key="speed")}
    for scen in ("independent", "collective"):
        for p in P_VALUES:
            speeds[(scen, p)] = mean_curve(select(results, scen, p), key="speed")
    at10 = {k: v[10.0] for k, v in speeds.items()}
    ok = 32.0 <= at10[("base", 0.0)] <= 33.0 and all(
        30.0 <= v <= 31.0 for k, v in at10.items() if k[1] >= 0.25)
    verdict(3, ok, "speeds at 10 veh/km: " + ", ".join(
        f"{s[:4]}/{p:g}={v:.2f}" for (s, p), v in sorted(at10.items())) + " m/s")
    assert ok


def _capacity_band(results, p):
    """Densities from the base capacity density to the collective one."""
    lo = max(curve(results, "base", 0.0).items(), key=lambda kv: kv[1])[0]
    hi = max(curve(results, "collective", p).items(), key=lambda kv: kv[1])[0]
    return [d for d in DENSITIES if lo <= d <= hi]


def test_4_scenario_ordering(results):
    base = curve(results, "base", 0.0)
    bad, checked = [], 0
    for p in P_VALUES:
        coll = curve(results, "collective", p)
        ind = curve(results, "independent", p)
        for d in _capacity_band(results, p):
            checked += 1
            if not coll[d] >= ind[d] * (1 - NOISE) or not ind[d] >= base[d] * (1 - NOISE):
                bad.append(f"p{p:g}/d{d:g}: {coll[d]:.0f} {ind[d]:.0f} {base[d]:.0f}")
    verdict(4, not bad, f"{checked - len(bad)}/{checked} points ordered collective >= independent"
            " >= base in the capacity band" + (f"; violations {'; '.join(bad)}" if bad else ""))
    assert not bad


def test_5_surge_at_docking_onset(results):
    rows = select(results, "collective", 0.5, 60.0)
    pre = float(np.mean([r["flow_3000_5000"] for r in rows]))
    post = float(np.mean([r["flow_6000_8000"] for r in rows]))
    gain = post / pre - 1
    ok = verdict(5, gain >= 0.05, f"flow {pre:.0f} -> {post:.0f} veh/h/lane, +{100 * gain:.1f}%;"
                 " need >= 5%")
    assert ok


def test_6_train_size_distribution(results):
    modes, ok = [], True
    for p, want in ((0.75, 5), (0.25, 2)):
        for d in (30.0, 60.0, 90.0):
            h = TrainHistogram(5)
            for r in select(results, "collective", p, d):
                for size, c in r["hist"].items():
                    h.counts[int(size)] += c
            got = h.modal_train_size()
            ok &= got == want
            modes.append(f"p{p:g}/d{d:g}: mode {got} (want {want})")
    verdict(6, ok, "; ".join(modes))
    assert ok


def test_7_composition_split(results):
    rows = select(results, "collective", 0.5, 60.0)
    coll = float(np.mean([r["frac_collective_ss"] for r in rows]))
    ind = float(np.mean([r["frac_independent_ss"] for r in rows]))
    ok = verdict(7, 0.5 < coll < 1.0 and ind > 0,
                 f"collective {coll:.3f}, independent or docking {ind:.3f}")
    assert ok


def test_8_safety_and_determinism(results, tmp_path):
    # every run enforces overlap, train and mode invariants each step and
    # raises on a violation, so a completed row is a clean run
    early = sum(r["early_modes"] for r in results)
    conserved = all(r["conserved"] for r in results)
    guarded = sum(r["guarded"] for r in results)
    cfg = tmp_path / "one.json"
    cfg.write_text(json.dumps({"density": 60, "p_mav": 0.5, "scenario": "collective"}))
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["run", "--config", str(cfg), "--seed", "42", "--out", str(out)]) == 0
        outs.append(sorted(p.read_bytes() for p in out.rglob("*.csv")))
    identical = outs[0] == outs[1]
    ok = early == 0 and conserved and identical
    verdict(8, ok, f"{len(results)} runs completed with per-step invariant checks; "
            f"early modes {early}; conservation {'held' if conserved else 'broken'}; "
            f"guard clamps {guarded}; rerun CSVs {'identical' if identical else 'differ'}")
    assert ok


def test_9_rule_oracles():
    import oracle
    from mavsim.tsm import safe_speed
    from test_tsm import (
        _docking_violations,
        _moving_leader_violations,
        _stationary_leader_violations,
    )

    follower = _stationary_leader_violations(80, 200) + _moving_leader_violations(80, 200)
    docking = _docking_violations(80, 200)
    examples_ok = (safe_speed(0, 6, 6) == 4 == oracle.v_safe(0, 6)
                   and safe_speed(20, 50, 6) == 26 == oracle.v_safe(20, 50))
    ok = follower == 0 and docking == 0 and examples_ok
    verdict(9, ok, f"two-vehicle enumeration over v <= 80, d <= 200: TSM follower violations "
            f"{follower}, docking follower violations {docking}; worked examples and oracle "
            "comparisons live in the rule-level test modules")
    assert ok
