"""Command-line experiment harness.

``simulate run``     one point, one series CSV and a summary line
``simulate sweep``   density x p_mav x scenario x replicate grid on a worker pool
``simulate check``   schema and invariant re-validation of an output directory
``simulate render``  SVG charts from the CSVs of an output directory

Configs are JSON in physical units (m, m/s, m/s^2); they are converted to
cells once, here.  Per-point seeds come from a stable hash of the master
seed and the point coordinates, so growing the grid never changes the
seeds of existing points.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import re
import sys
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .charts import BarPanel, Series, bar_panels, downsample, line_chart
from .core import PHYSICAL_FIELDS, ConfigError, SimParams

LOG = logging.getLogger("mavsim.cli")

SCHEMA_VERSION = 1
FUNDAMENTAL_COLUMNS = ("scenario", "p_mav", "density_veh_per_km_per_lane", "seed",
                       "mean_flow_veh_per_h_per_lane", "mean_speed_m_per_s")
TRAINS_COLUMNS = ("scenario", "p_mav", "density", "seed", "size", "count")
SERIES_COLUMNS = ("t", "flow_veh_per_h_per_lane", "mean_speed_m_per_s",
                  "frac_independent_or_docking", "frac_collective")

# scenario -> docking enabled; "base" is conventional traffic only
SCENARIOS = {"base": False, "independent": False, "collective": True}
SCENARIO_ALIASES = {"independent-only": "independent", "without": "independent",
                    "with": "collective"}
DEFAULT_DENSITIES = tuple(float(d) for d in range(5, 145, 5))
DEFAULT_P_MAV = (0.0, 0.25, 0.5, 0.75)
DEFAULT_SCENARIOS = ("independent", "collective")
DEFAULT_SEEDS_PER_POINT = 3
GRID_KEYS = {"densities", "p_mav_values", "scenarios", "seeds_per_point", "scenario",
             "series", "seed_mode"}
SEED_MODES = ("hashed", "literal")


@dataclass(frozen=True)
class Point:
    scenario: str
    p_mav: float
    density: float
    replicate: int
    seed: int

    @property
    def name(self):
        return f"{self.scenario}_p{self.p_mav:g}_d{self.density:g}_r{self.replicate}"


@dataclass(frozen=True)
class SweepConfig:
    base: SimParams
    densities: tuple = DEFAULT_DENSITIES
    p_mav_values: tuple = DEFAULT_P_MAV
    scenarios: tuple = DEFAULT_SCENARIOS
    seeds_per_point: int = DEFAULT_SEEDS_PER_POINT
    series: bool = True
    # "hashed": per-point seeds from point_seed; "literal": every point uses
    # the master seed as given (single runs)
    seed_mode: str = "hashed"

    @property
    def master_seed(self):
        return self.base.seed

    def points(self):
        """Grid points in a fixed order: scenario, p_mav, density, replicate."""
        out = []
        for scenario in self.scenarios:
            p_values = (0.0,) if scenario == "base" else self.p_mav_values
            for p_mav in p_values:
                for density in self.densities:
                    for rep in range(self.seeds_per_point):
                        if self.seed_mode == "literal":
                            seed = self.master_seed
                        else:
                            seed = point_seed(self.master_seed, density, p_mav,
                                              scenario, rep)
                        out.append(Point(scenario, float(p_mav), float(density), rep, seed))
        return out

    def params_for(self, point):
        return dataclasses.replace(
            self.base, density=point.density, p_mav=point.p_mav, seed=point.seed,
            docking_enabled_scenario=SCENARIOS[point.scenario],
        )

    def resolved(self):
        """JSON-ready echo of every setting, in physical units."""
        physical = self.base.to_physical()
        for key in ("density", "p_mav"):
            physical.pop(key)
        return {
            **physical,
            "densities": list(self.densities),
            "p_mav_values": list(self.p_mav_values),
            "scenarios": list(self.scenarios),
            "seeds_per_point": self.seeds_per_point,
            "series": self.series,
            "seed_mode": self.seed_mode,
        }


def point_seed(master_seed, density, p_mav, scenario, replicate):
    """First 8 bytes of SHA-256 over the canonical point key, as uint64."""
    key = f"{int(master_seed)}|{float(density):.10g}|{float(p_mav):.10g}|{scenario}|{int(replicate)}"
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "little")


def _key_line(text, key):
    if not text:
        return None
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(text, key):
    line = _key_line(text, key)
    return f"{key} (line {line})" if line else key


def _as_list(value, name, text):
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError(f"{_where(text, name)}: list must not be empty")
        return tuple(value)
    return (value,)


def _scenario_name(name, text, key):
    name = SCENARIO_ALIASES.get(name, name)
    if name not in SCENARIOS:
        raise ConfigError(f"{_where(text, key)}: unknown scenario {name!r}; "
                          f"expected one of {', '.join(SCENARIOS)}")
    return name


def parse_config(raw, text=None):
    """Resolve a config mapping (or a manifest) into a :class:`SweepConfig`.

    Scalar ``density``/``p_mav``/``scenario`` give a one-value grid axis;
    the plural keys give full axes; missing axes take the default sweep.
    Errors name the offending key and, when the JSON text is known, its line.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    if "config" in raw and "tool" in raw:
        raw = raw["config"]
    unknown = set(raw) - set(PHYSICAL_FIELDS) - GRID_KEYS
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"{_where(text, key)}: unknown key")
    physical = {k: v for k, v in raw.items() if k in PHYSICAL_FIELDS}
    try:
        base = SimParams.from_physical(**physical)
    except ConfigError as exc:
        field_name = str(exc).split(":", 1)[0]
        raise ConfigError(f"{_where(text, field_name)}: {str(exc).split(':', 1)[-1].strip()}") from None

    def axis(plural, singular, default):
        if plural in raw and singular in raw:
            raise ConfigError(f"{_where(text, plural)}: give either {plural} or {singular}")
        if plural in raw:
            return _as_list(raw[plural], plural, text), plural
        if singular in raw:
            return _as_list(raw[singular], singular, text), singular
        return default, plural

    densities, dkey = axis("densities", "density", DEFAULT_DENSITIES)
    p_values, pkey = axis("p_mav_values", "p_mav", DEFAULT_P_MAV)
    scen, skey = axis("scenarios", "scenario", DEFAULT_SCENARIOS)
    scenarios = tuple(dict.fromkeys(_scenario_name(s, text, skey) for s in scen))
    seeds = raw.get("seeds_per_point", DEFAULT_SEEDS_PER_POINT)
    if isinstance(seeds, bool) or not isinstance(seeds, int) or seeds < 1:
        raise ConfigError(f"{_where(text, 'seeds_per_point')}: expected a positive integer")
    try:
        densities = tuple(float(d) for d in densities)
        p_values = tuple(float(p) for p in p_values)
    except (TypeError, ValueError):
        raise ConfigError(f"{_where(text, dkey)}: values must be numbers") from None
    for d in densities:
        try:
            dataclasses.replace(base, density=d)
        except ConfigError as exc:
            raise ConfigError(f"{_where(text, dkey)}: {str(exc).split(':', 1)[-1].strip()}") from None
    for p in p_values:
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{_where(text, pkey)}: p_mav must lie in [0, 1], got {p}")
    seed_mode = raw.get("seed_mode", "hashed")
    if seed_mode not in SEED_MODES:
        raise ConfigError(f"{_where(text, 'seed_mode')}: expected one of {', '.join(SEED_MODES)}")
    return SweepConfig(base=base, densities=densities, p_mav_values=p_values,
                       scenarios=scenarios, seeds_per_point=seeds,
                       series=bool(raw.get("series", True)), seed_mode=seed_mode)


def load_config(path):
    """Read a JSON config file (an empty file means the default sweep)."""
    if path is None:
        return parse_config({})
    text = Path(path).read_text()
    if not text.strip():
        return parse_config({}, text)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(raw, text)


# -- running points -------------------------------------------------------------

def _series_text(out):
    rows = ["t," + ",".join(SERIES_COLUMNS[1:])]
    for t, q, v, fi, fc in zip(out.t.tolist(), out.flow.tolist(), out.mean_speed.tolist(),
                               out.frac_independent_or_docking.tolist(),
                               out.frac_collective.tolist()):
        rows.append(f"{t},{q!r},{v!r},{fi!r},{fc!r}")
    rows[0] = ",".join(SERIES_COLUMNS)
    return "\n".join(rows) + "\n"


def run_point(params, point, out_dir=None, write_series=True):
    """Run one grid point; returns a plain dict so it crosses process lines."""
    from .engine import run

    t0 = time.perf_counter()
    record = {"point": dataclasses.asdict(point), "name": point.name}
    try:
        result = run(params, scenario=point.scenario)
    except Exception as exc:  # a failing point must not sink the sweep
        LOG.error("point %s failed: %s", point.name, exc)
        record.update(status="failed", error=f"{type(exc).__name__}: {exc}")
        return record
    if out_dir is not None and write_series:
        series_dir = Path(out_dir) / "series"
        series_dir.mkdir(parents=True, exist_ok=True)
        (series_dir / f"{point.name}.csv").write_text(_series_text(result))
    s = result.summary
    record.update(
        status="ok",
        mean_flow=s.mean_flow,
        mean_speed=s.mean_speed,
        trains={int(k): int(v) for k, v in sorted(result.histogram.counts.items())},
        samples=result.histogram.samples,
        n_mav=int((result.final_state.kind == 1).sum()),
        guarded=int(result.guarded.sum()),
        seconds=round(time.perf_counter() - t0, 3),
    )
    return record


def _run_job(job):
    params, point, out_dir, write_series = job
    return run_point(params, point, out_dir, write_series)


def resolve_workers(requested):
    env = os.environ.get("SIM_WORKERS")
    if env:
        try:
            requested = int(env)
        except ValueError:
            raise ConfigError(f"SIM_WORKERS: expected an integer, got {env!r}") from None
    if requested is None:
        requested = os.cpu_count() or 1
    if requested < 1:
        raise ConfigError("workers: must be at least 1")
    return requested


def _prepare_out(out, force):
    out = Path(out)
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigError(f"--out: {out} is not empty (use --force to reuse it)")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fundamental_row(point, rec):
    return [point.scenario, repr(point.p_mav), repr(point.density), str(point.seed),
            repr(rec["mean_flow"]), repr(rec["mean_speed"])]


def write_results(out, cfg, points, records, started=None):
    """Write the CSVs and manifest; rows follow grid order, not finish order."""
    out = Path(out)
    by_name = {r["name"]: r for r in records}
    with open(out / "fundamental.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FUNDAMENTAL_COLUMNS)
        for p in points:
            rec = by_name.get(p.name)
            if rec and rec["status"] == "ok":
                w.writerow(_fundamental_row(p, rec))
    with open(out / "trains.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAINS_COLUMNS)
        for p in points:
            rec = by_name.get(p.name)
            if rec and rec["status"] == "ok":
                for size, count in rec["trains"].items():
                    w.writerow([p.scenario, repr(p.p_mav), repr(p.density), str(p.seed),
                                str(size), str(count)])
    manifest = {
        "tool": "mavsim",
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config": cfg.resolved(),
        "points": [
            {
                **dataclasses.asdict(p),
                "name": p.name,
                "status": by_name.get(p.name, {}).get("status", "missing"),
                "error": by_name.get(p.name, {}).get("error"),
                "samples": by_name.get(p.name, {}).get("samples"),
                "n_mav": by_name.get(p.name, {}).get("n_mav"),
                "guarded": by_name.get(p.name, {}).get("guarded"),
                "series": f"series/{p.name}.csv" if cfg.series else None,
            }
            for p in points
        ],
    }
    if started is not None:
        manifest["wall_seconds"] = round(time.time() - started, 1)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def run_sweep(cfg, out, workers=None, force=False, render=True):
    """Execute every grid point and write all artifacts; returns the manifest."""
    out = _prepare_out(out, force)
    workers = resolve_workers(workers)
    points = cfg.points()
    jobs = [(cfg.params_for(p), p, str(out), cfg.series) for p in points]
    LOG.info("sweep: %d points on %d worker(s)", len(points), workers)
    started = time.time()
    records = []
    if workers == 1:
        for k, job in enumerate(jobs, 1):
            records.append(_run_job(job))
            LOG.info("[%d/%d] %s", k, len(jobs), job[1].name)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for k, rec in enumerate(pool.map(_run_job, jobs, chunksize=1), 1):
                records.append(rec)
                LOG.info("[%d/%d] %s %s", k, len(jobs), rec["name"], rec["status"])
    manifest = write_results(out, cfg, points, records, started)
    if render:
        render_charts(out)
    return manifest


# -- validation -----------------------------------------------------------------

class SchemaError(ValueError):
    pass


def read_csv(path, columns):
    """Rows of a CSV whose header must equal ``columns`` exactly."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path.name}: empty file, expected header {','.join(columns)}")
        for k, (got, want) in enumerate(zip(header, columns)):
            if got != want:
                raise SchemaError(f"{path.name}: column {k + 1} is {got!r}, expected {want!r}")
        if len(header) < len(columns):
            missing = columns[len(header)]
            raise SchemaError(f"{path.name}: missing column {missing!r} "
                              f"({len(header)} columns, expected {len(columns)})")
        if len(header) > len(columns):
            raise SchemaError(f"{path.name}: unexpected column {header[len(columns)]!r} "
                              f"({len(header)} columns, expected {len(columns)})")
        return [dict(zip(columns, row)) for row in reader]


def _num(row, col, path, cast=float):
    try:
        return cast(row[col])
    except (TypeError, ValueError):
        raise SchemaError(f"{path.name}: column {col!r} has non-numeric value {row[col]!r}") from None


def check_output(out):
    """Return a list of problems found in an output directory (empty = valid)."""
    out = Path(out)
    problems = []
    try:
        manifest = json.loads((out / "manifest.json").read_text())
    except (OSError, json.JSONDecodeError) as exc:
        return [f"manifest.json: {exc}"]
    cfg = parse_config(manifest)
    l_max = cfg.base.l_max
    points = {p["name"]: p for p in manifest["points"]}
    ok_points = {n for n, p in points.items() if p["status"] == "ok"}
    if set(points) != {p.name for p in cfg.points()}:
        problems.append("manifest.json: point list does not match the configured grid")
    for p in cfg.points():
        if p.name in points and points[p.name]["seed"] != p.seed:
            problems.append(f"manifest.json: seed of {p.name} does not match its hash")
    try:
        fund = read_csv(out / "fundamental.csv", FUNDAMENTAL_COLUMNS)
        trains = read_csv(out / "trains.csv", TRAINS_COLUMNS)
    except (OSError, SchemaError) as exc:
        return problems + [str(exc)]
    path = out / "fundamental.csv"
    seen = set()
    for row in fund:
        try:
            density = _num(row, "density_veh_per_km_per_lane", path)
            p_mav = _num(row, "p_mav", path)
            flow = _num(row, "mean_flow_veh_per_h_per_lane", path)
            speed = _num(row, "mean_speed_m_per_s", path)
            seed = _num(row, "seed", path, int)
        except SchemaError as exc:
            problems.append(str(exc))
            continue
        key = (row["scenario"], p_mav, density, seed)
        if key in seen:
            problems.append(f"fundamental.csv: duplicate row {key}")
        seen.add(key)
        if not math.isclose(flow, density * speed * 3.6, rel_tol=1e-9, abs_tol=1e-9):
            problems.append(f"fundamental.csv: q != k*v at {key}")
        if speed < 0 or speed > cfg.base.v_max * cfg.base.cell_length:
            problems.append(f"fundamental.csv: speed {speed} out of range at {key}")
    if len(fund) != len(ok_points):
        problems.append(f"fundamental.csv: {len(fund)} rows for {len(ok_points)} completed points")
    path = out / "trains.csv"
    per_point = defaultdict(dict)
    for row in trains:
        try:
            size = _num(row, "size", path, int)
            count = _num(row, "count", path, int)
            key = (row["scenario"], _num(row, "p_mav", path), _num(row, "density", path),
                   _num(row, "seed", path, int))
        except SchemaError as exc:
            problems.append(str(exc))
            continue
        if not 1 <= size <= l_max:
            problems.append(f"trains.csv: size {size} outside 1..{l_max} at {key}")
        if count < 0:
            problems.append(f"trains.csv: negative count at {key}")
        per_point[key][size] = count
    by_key = {(p["scenario"], p["p_mav"], p["density"], p["seed"]): p
              for p in manifest["points"]}
    for key, hist in per_point.items():
        meta = by_key.get(key)
        if meta is None:
            problems.append(f"trains.csv: row {key} is not in the manifest")
            continue
        if meta.get("samples") is not None and meta.get("n_mav") is not None:
            modules = sum(size * c for size, c in hist.items())
            if modules != meta["samples"] * meta["n_mav"]:
                problems.append(f"trains.csv: module total {modules} != samples x MAVs at {key}")
    for name in sorted(ok_points):
        rel = points[name].get("series")
        if not rel:
            continue
        problems.extend(_check_series(out / rel, cfg.base.t_total))
    for name, p in points.items():
        if p["status"] != "ok":
            problems.append(f"point {name}: {p['status']} ({p.get('error')})")
    return problems


def _check_series(path, t_total):
    try:
        rows = read_csv(path, SERIES_COLUMNS)
    except (OSError, SchemaError) as exc:
        return [str(exc)]
    problems = []
    if len(rows) != t_total:
        problems.append(f"{path.name}: {len(rows)} rows, expected {t_total}")
    for k, row in enumerate(rows):
        fi = float(row["frac_independent_or_docking"])
        fc = float(row["frac_collective"])
        if int(row["t"]) != k:
            problems.append(f"{path.name}: t column out of sequence at row {k + 1}")
            break
        if not (0 <= fi <= 1 and 0 <= fc <= 1) or (fi + fc > 0 and abs(fi + fc - 1) > 1e-9):
            problems.append(f"{path.name}: composition fractions invalid at t={k}")
            break
    return problems


# -- charts ---------------------------------------------------------------------

def render_charts(out):
    """Write SVG charts for every CSV in ``out``; returns the files written."""
    out = Path(out)
    charts = out / "charts"
    charts.mkdir(exist_ok=True)
    written = []
    fund = read_csv(out / "fundamental.csv", FUNDAMENTAL_COLUMNS) if (out / "fundamental.csv").exists() else []
    groups = defaultdict(lambda: defaultdict(list))
    for row in fund:
        key = (row["scenario"], float(row["p_mav"]))
        d = float(row["density_veh_per_km_per_lane"])
        groups[key][d].append((float(row["mean_flow_veh_per_h_per_lane"]),
                                float(row["mean_speed_m_per_s"])))
    scenarios = sorted({k[0] for k in groups}) or ["all"]
    for scen in scenarios:
        for col, label, fname in ((0, "flow (veh/h/lane)", "flow_density"),
                                  (1, "mean speed (m/s)", "speed_density")):
            series = []
            for (s, p_mav), pts in sorted(groups.items()):
                if s != scen:
                    continue
                xs = sorted(pts)
                ys = [sum(v[col] for v in pts[x]) / len(pts[x]) for x in xs]
                series.append(Series(f"p_mav = {p_mav:g}", xs, ys, style="both"))
            svg = line_chart(series, f"{label.split(' (')[0].capitalize()} vs density ({scen})",
                             "density (veh/km/lane)", label)
            path = charts / f"{fname}_{scen}.svg"
            path.write_text(svg)
            written.append(path)
    trains = read_csv(out / "trains.csv", TRAINS_COLUMNS) if (out / "trains.csv").exists() else []
    hist = defaultdict(lambda: defaultdict(lambda: defaultdict(int)))
    for row in trains:
        key = (row["scenario"], float(row["p_mav"]))
        hist[key][float(row["density"])][int(row["size"])] += int(row["count"])
    panels = []
    for (scen, p_mav), by_density in sorted(hist.items()):
        if p_mav == 0:
            continue
        sizes = sorted({s for h in by_density.values() for s in h if s >= 2})
        if not sizes:
            continue
        groups_ = {}
        for d in sorted(by_density):
            h = by_density[d]
            total = sum(h[s] for s in sizes)
            if total:
                groups_[f"{d:g} veh/km"] = [h[s] / total for s in sizes]
        if groups_:
            panels.append(BarPanel(f"{scen}, p_mav = {p_mav:g}", sizes, groups_))
    path = charts / "train_sizes.svg"
    path.write_text(bar_panels(panels, "MAV train size distribution",
                               "train size (modules)", "share of trains"))
    written.append(path)
    dock_start = None
    manifest_path = out / "manifest.json"
    if manifest_path.exists():
        dock_start = json.loads(manifest_path.read_text())["config"].get("t_dock_start")
    for series_path in sorted((out / "series").glob("*_r0.csv")) if (out / "series").exists() else []:
        rows = read_csv(series_path, SERIES_COLUMNS)
        t = [int(r["t"]) for r in rows]
        q = [float(r["flow_veh_per_h_per_lane"]) for r in rows]
        xs, ys = downsample(t, q)
        marks = [(dock_start, "docking starts")] if dock_start is not None else []
        svg = line_chart([Series("flow", xs, ys)], f"Flow time series {series_path.stem}",
                         "time step", "flow (veh/h/lane)", vlines=marks)
        path = charts / f"series_{series_path.stem}.svg"
        path.write_text(svg)
        written.append(path)
    return written


# -- entry point ----------------------------------------------------------------

def _cmd_run(args):
    cfg = load_config(args.config)
    if len(cfg.densities) != 1 or len(cfg.p_mav_values) != 1:
        raise ConfigError("run: config must give a single density and p_mav")
    scenario = cfg.scenarios[-1] if len(cfg.scenarios) == 1 else "collective"
    seed = cfg.base.seed if args.seed is None else args.seed
    cfg = dataclasses.replace(cfg, scenarios=(scenario,), seeds_per_point=1,
                              seed_mode="literal",
                              base=dataclasses.replace(cfg.base, seed=int(seed)))
    (point,) = cfg.points()
    out = _prepare_out(args.out, args.force) if args.out else None
    rec = run_point(cfg.params_for(point), point, out, write_series=True)
    if rec["status"] != "ok":
        print(f"FAILED {point.name}: {rec['error']}")
        return 1
    if out is not None:
        write_results(out, cfg, [point], [rec])
    print(f"scenario={point.scenario} p_mav={point.p_mav:g} density={point.density:g} "
          f"seed={point.seed} mean_flow={rec['mean_flow']:.2f} veh/h/lane "
          f"mean_speed={rec['mean_speed']:.3f} m/s")
    return 0


def _cmd_sweep(args):
    cfg = load_config(args.config)
    manifest = run_sweep(cfg, args.out, workers=args.workers, force=args.force,
                         render=not args.no_render)
    failed = [p["name"] for p in manifest["points"] if p["status"] != "ok"]
    print(f"{len(manifest['points']) - len(failed)}/{len(manifest['points'])} points completed "
          f"-> {args.out}")
    for name in failed:
        print(f"failed: {name}")
    return 1 if failed else 0


def _cmd_check(args):
    problems = check_output(args.out)
    for p in problems:
        print(f"problem: {p}")
    print("ok" if not problems else f"{len(problems)} problem(s)")
    return 0 if not problems else 1


def _cmd_render(args):
    written = render_charts(args.out)
    for path in written:
        print(path)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="simulate", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="simulate one point")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("sweep", help="simulate a density x p_mav x scenario grid")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true")
    p.add_argument("--no-render", action="store_true")
    p.set_defaults(func=_cmd_sweep)
    p = sub.add_parser("check", help="re-validate an output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_check)
    p = sub.add_parser("render", help="draw SVG charts from an output directory")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_render)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
