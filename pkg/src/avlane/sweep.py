"""AV-penetration sweeps over both lane policies, and the CSV report behind them."""

from __future__ import annotations

import configparser
import csv
import dataclasses
import datetime as _dt
import enum
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import __version__
from .assignment import AssignmentConfig, RouteAssignment, assign_incremental
from .cost import FuelModelParams, HeadwayConfig
from .demand import ODMatrix, Population, generate_population, load_od, reclass_population
from .metrics import (ClassMetrics, class_metrics, demand_delta, segment_classes,
                      segment_throughput, throughput_by_class)
from .network import LanePolicy, RoadClass, RoadNetwork, default_eligible, load_network, transform_av_lane

log = logging.getLogger(__name__)

CLASS_ORDER = (RoadClass.HIGHWAY, RoadClass.MAJOR, RoadClass.OTHER)


class Scenario(enum.Enum):
    WITH_AV_LANE = "with-av-lane"
    NO_AV_LANE = "no-av-lane"


class SweepError(RuntimeError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    network: Union[str, RoadNetwork]
    od: Union[str, ODMatrix]
    agents: int = 10_000
    av_percents: tuple[float, ...] = tuple(range(0, 101, 10))
    headways: tuple[float, ...] = (1.0,)
    h_cv: float = 1.8
    seed: int = 0
    assignment: AssignmentConfig = AssignmentConfig()
    fuel: FuelModelParams = FuelModelParams()
    scenarios: tuple[Scenario, ...] = (Scenario.WITH_AV_LANE, Scenario.NO_AV_LANE)
    min_av_lane_length_m: float = 0.0
    parallel: bool = False

    def __post_init__(self):
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        if not self.av_percents or not self.headways:
            raise ConfigError("AV percent and headway grids must be non-empty")
        if any(not 0 <= p <= 100 for p in self.av_percents):
            raise ConfigError("AV percentages must lie in [0, 100]")
        if self.agents < 1:
            raise ConfigError("agents must be >= 1")
        for h in self.headways:
            HeadwayConfig(h, self.h_cv)

    def describe(self) -> dict:
        """JSON-friendly view for the manifest."""
        def conv(v):
            if isinstance(v, enum.Enum):
                return v.value
            if isinstance(v, (RoadNetwork, ODMatrix)):
                return f"<in-memory {type(v).__name__}>"
            if dataclasses.is_dataclass(v):
                return {f.name: conv(getattr(v, f.name)) for f in dataclasses.fields(v)}
            if isinstance(v, (tuple, list)):
                return [conv(x) for x in v]
            return v
        return conv(self)


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.replace(";", ",").split(",") if t.strip()]


def load_config(path) -> SweepConfig:
    """Read a sweep config from INI (``[sweep]``, ``[assignment]``, ``[fuel]``) or JSON.

    Relative file paths are resolved against the config file's directory.
    """
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    if path.lower().endswith(".json"):
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        sweep, asg, fuel = doc.get("sweep", doc), doc.get("assignment", {}), doc.get("fuel", {})
    else:
        cp = configparser.ConfigParser()
        if not cp.read(path, encoding="utf-8"):
            raise ConfigError(f"cannot read config {path}")
        if "sweep" not in cp:
            raise ConfigError("config lacks a [sweep] section")
        sweep = dict(cp["sweep"])
        asg = dict(cp["assignment"]) if "assignment" in cp else {}
        fuel = dict(cp["fuel"]) if "fuel" in cp else {}

    def listof(v, conv):
        if isinstance(v, (list, tuple)):
            return tuple(conv(x) for x in v)
        return tuple(conv(x) for x in _split(str(v)))

    def truth(v):
        return v if isinstance(v, bool) else str(v).strip().lower() in ("1", "true", "yes", "on")

    try:
        h_cv = float(sweep.get("h_cv", 1.8))
        headways = listof(sweep.get("headways", "1.0"), float)
        acfg = AssignmentConfig(
            batch_count=int(asg.get("batch_count", 20)),
            max_passes=int(asg.get("max_passes", 5)),
            gap_tolerance=float(asg.get("gap_tolerance", 1e-3)),
            period_h=float(asg.get("period_h", 1.0)),
            headways=HeadwayConfig(headways[0], h_cv),
            seed=int(asg.get("seed", sweep.get("seed", 0))),
            capacity_mode=str(asg.get("capacity_mode", "link")),
        )
        return SweepConfig(
            network=os.path.join(base, sweep["network"]),
            od=os.path.join(base, sweep["od"]),
            agents=int(sweep.get("agents", 10_000)),
            av_percents=listof(sweep.get("av_percents", sweep.get("av_percent", ",".join(map(str, range(0, 101, 10))))), float),
            headways=headways,
            h_cv=h_cv,
            seed=int(sweep.get("seed", 0)),
            assignment=acfg,
            fuel=FuelModelParams(float(fuel.get("idle_rate", 0.5)), float(fuel.get("distance_rate", 0.07))),
            scenarios=listof(sweep.get("scenarios", "with-av-lane, no-av-lane"), Scenario),
            min_av_lane_length_m=float(sweep.get("min_av_lane_length_m", 0.0)),
            parallel=truth(sweep.get("parallel", False)),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True, eq=False)
class CellResult:
    scenario: Scenario
    av_percent: float
    h_av: float
    metrics: ClassMetrics
    relative_gap: float
    converged: bool
    passes: int
    population_fingerprint: str
    demand_fingerprint: str
    flows_conserved: bool
    cv_on_av_lanes: int
    assignment: RouteAssignment = field(repr=False)


CellKey = tuple  # (Scenario, av_percent, h_av)


@dataclass(frozen=True, eq=False)
class SweepReport:
    config: SweepConfig
    cells: dict
    demand_deltas: dict
    throughput: dict
    classes: dict

    def cell(self, scenario: Scenario, av_percent: float, h_av: Optional[float] = None) -> CellResult:
        h = self.config.headways[0] if h_av is None else h_av
        return self.cells[(scenario, float(av_percent), float(h))]

    def series(self, scenario: Scenario, attr: str, h_av: Optional[float] = None) -> np.ndarray:
        return np.array([getattr(self.cell(scenario, p, h_av).metrics, attr)
                         for p in self.config.av_percents], dtype=float)


def _resolve_inputs(cfg: SweepConfig):
    net = cfg.network if isinstance(cfg.network, RoadNetwork) else load_network(cfg.network)
    od = cfg.od if isinstance(cfg.od, ODMatrix) else load_od(cfg.od, net)
    od.check_nodes(net.n_nodes)
    return net, od


def _run_cell(net: RoadNetwork, pop: Population, cfg: SweepConfig, key) -> CellResult:
    scenario, pct, h_av = key
    acfg = dataclasses.replace(cfg.assignment, headways=HeadwayConfig(h_av, cfg.h_cv))
    assign = assign_incremental(net, pop, acfg)
    fa, fc = assign.recount_flows()
    av_only = [l.id for l in net.links if l.policy is LanePolicy.AV_ONLY]
    return CellResult(
        scenario=scenario, av_percent=pct, h_av=h_av,
        metrics=class_metrics(assign, pop, cfg.fuel),
        relative_gap=assign.relative_gap,
        converged=assign.converged,
        passes=assign.iteration_count,
        population_fingerprint=pop.fingerprint(),
        demand_fingerprint=pop.demand_fingerprint(),
        flows_conserved=bool(np.array_equal(fa, assign.flow_av) and np.array_equal(fc, assign.flow_cv)),
        cv_on_av_lanes=int(assign.flow_cv[av_only].sum()) if av_only else 0,
        assignment=assign,
    )


def _cell_job(args):
    net, pop, cfg, key = args
    try:
        return _run_cell(net, pop, cfg, key)
    except Exception as exc:
        raise SweepError(f"cell {key[0].value} {key[1]}% h_av={key[2]}: {exc}") from exc


def run_sweep(cfg: SweepConfig) -> SweepReport:
    """Assign every (scenario, AV %, AV headway) cell on one shared population.

    A single population is drawn once and relabelled per cell, so both
    scenarios at a given AV share see identical demand and AV sets grow
    monotonically along the grid.
    """
    base, od = _resolve_inputs(cfg)
    nets = {Scenario.NO_AV_LANE: base}
    if Scenario.WITH_AV_LANE in cfg.scenarios:
        nets[Scenario.WITH_AV_LANE] = transform_av_lane(base, default_eligible(cfg.min_av_lane_length_m))
    population = generate_population(od, cfg.agents, 0.0, cfg.seed)

    keys = [(s, float(p), float(h)) for h in cfg.headways for p in cfg.av_percents for s in cfg.scenarios]
    pops = {}
    jobs = []
    for key in keys:
        pct = key[1]
        if pct not in pops:
            pops[pct] = reclass_population(population, pct / 100.0)
        jobs.append((nets[key[0]], pops[pct], cfg, key))

    if cfg.parallel and len(jobs) > 1:
        with ProcessPoolExecutor() as pool:
            results = list(pool.map(_cell_job, jobs))
    else:
        results = []
        for job in jobs:
            log.info("cell %s %.1f%% h_av=%.2f", job[3][0].value, job[3][1], job[3][2])
            results.append(_cell_job(job))
    cells = dict(zip(keys, results))

    classes = segment_classes(base)
    deltas = {}
    if Scenario.WITH_AV_LANE in cfg.scenarios and Scenario.NO_AV_LANE in cfg.scenarios:
        for h in cfg.headways:
            for p in cfg.av_percents:
                a = cells[(Scenario.WITH_AV_LANE, float(p), float(h))]
                b = cells[(Scenario.NO_AV_LANE, float(p), float(h))]
                if a.population_fingerprint != b.population_fingerprint:
                    raise SweepError(f"population mismatch at {p}%")
                deltas[(float(p), float(h))] = demand_delta(a.assignment, b.assignment, classes)
    throughput = {}
    if 0.0 in {float(p) for p in cfg.av_percents}:
        for (s, p, h), c in cells.items():
            ref = cells[(s, 0.0, h)]
            throughput[(s, p, h)] = throughput_by_class(c.assignment, ref.assignment, classes)
    return SweepReport(cfg, cells, deltas, throughput, classes)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


SERIES = ("avg_time_all", "avg_time_av", "avg_time_cv", "fuel_total_all", "fuel_total_av", "fuel_total_cv")


def emit_report(rep: SweepReport, out_dir, per_link: bool = False) -> list[str]:
    """Write the CSV tables and ``manifest.json`` into ``out_dir``; returns written paths."""
    cfg = rep.config
    os.makedirs(out_dir, exist_ok=True)
    os.makedirs(os.path.join(out_dir, "series"), exist_ok=True)
    written = []
    keys = [(s, float(p), float(h)) for h in cfg.headways for p in cfg.av_percents for s in cfg.scenarios]

    path = os.path.join(out_dir, "summary.csv")
    rows = []
    for k in keys:
        c = rep.cells[k]
        m = c.metrics
        rows.append([k[0].value, k[1], k[2], m.n_all, m.n_av, m.n_cv, m.avg_time_all, m.avg_time_av,
                     m.avg_time_cv, m.fuel_total_all, m.fuel_total_av, m.fuel_total_cv, c.relative_gap,
                     c.converged, c.passes, c.population_fingerprint])
    _write_csv(path, ["scenario", "av_percent", "h_av", "n_agents", "n_av", "n_cv", "avg_time_all",
                      "avg_time_av", "avg_time_cv", "fuel_total_all", "fuel_total_av", "fuel_total_cv",
                      "relative_gap", "converged", "passes", "population_fingerprint"], rows)
    written.append(path)

    path = os.path.join(out_dir, "demand_delta.csv")
    _write_csv(path, ["av_percent", "h_av"] + [c.value for c in CLASS_ORDER],
               [[p, h] + [d.get(c) for c in CLASS_ORDER] for (p, h), d in sorted(rep.demand_deltas.items())])
    written.append(path)

    path = os.path.join(out_dir, "throughput.csv")
    _write_csv(path, ["scenario", "av_percent", "h_av"] + [c.value for c in CLASS_ORDER],
               [[k[0].value, k[1], k[2]] + [rep.throughput[k].get(c) for c in CLASS_ORDER]
                for k in keys if k in rep.throughput])
    written.append(path)

    columns = [(s, h) for h in cfg.headways for s in cfg.scenarios]
    for attr in SERIES:
        path = os.path.join(out_dir, "series", f"{attr}.csv")
        header = ["av_percent"] + [s.value if len(cfg.headways) == 1 else f"{s.value}@{h}" for s, h in columns]
        _write_csv(path, header, [[float(p)] + [getattr(rep.cells[(s, float(p), float(h))].metrics, attr)
                                                for s, h in columns] for p in cfg.av_percents])
        written.append(path)

    if per_link:
        path = os.path.join(out_dir, "per_link_throughput.csv")
        seg_class = {s: k for k, segs in rep.classes.items() for s in segs}
        base_net = rep.cells[keys[0]].assignment.network
        rows = []
        for k in keys:
            flows = segment_throughput(rep.cells[k].assignment)
            ref = segment_throughput(rep.cells[(k[0], 0.0, k[2])].assignment) if (k[0], 0.0, k[2]) in rep.cells else None
            for seg in sorted(flows):
                label = base_net.links[seg].label or str(seg)
                rows.append([k[0].value, k[1], k[2], label, seg_class[seg].value, flows[seg],
                             None if ref is None else flows[seg] - ref.get(seg, 0)])
        _write_csv(path, ["scenario", "av_percent", "h_av", "segment", "road_class", "throughput",
                          "change_vs_0"], rows)
        written.append(path)

    manifest = {
        "code_version": __version__,
        "seed": cfg.seed,
        "config": cfg.describe(),
        "files": [os.path.relpath(p, out_dir) for p in written],
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    target = os.path.join(out_dir, "manifest.json")
    fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    written.append(target)
    return written
