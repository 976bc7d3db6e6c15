"""``simulate`` command line: sweeps, single assignments, the closed-form model and network tools.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from .analytic import TwoLaneScenario, saturation_threshold, scenario2_time, solve_two_lane
from .assignment import AssignmentConfig, RoutingError, assign_incremental, write_agent_csv, write_link_csv
from .cost import FuelModelParams, HeadwayConfig
from .demand import DemandError, generate_population, load_od, save_od
from .metrics import class_metrics
from .network import NetworkError, default_eligible, load_network, save_network, transform_av_lane
from .sweep import ConfigError, emit_report, load_config, run_sweep
from .synthetic import GRID_GAP, GRID_MAX_PASSES, GRID_PERIOD_H, grid_network, grid_od

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if args.parallel:
        cfg = dataclasses.replace(cfg, parallel=True)
    rep = run_sweep(cfg)
    for path in emit_report(rep, args.out, per_link=args.per_link):
        print(path)


def _cmd_assign(args):
    net = load_network(args.network)
    od = load_od(args.od, net)
    if args.scenario == "with-av-lane":
        net = transform_av_lane(net, default_eligible(args.min_av_lane_length))
    pop = generate_population(od, args.agents, args.av_percent / 100.0, args.seed)
    cfg = AssignmentConfig(batch_count=args.batch_count, max_passes=args.max_passes,
                           gap_tolerance=args.gap_tolerance, period_h=args.period_h,
                           headways=HeadwayConfig(args.headway_av, args.headway_cv), seed=args.seed)
    res = assign_incremental(net, pop, cfg)
    m = class_metrics(res, pop, FuelModelParams())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_link_csv(res, os.path.join(args.out, "links.csv"))
        write_agent_csv(res, os.path.join(args.out, "agents.csv"))
    print(json.dumps({"scenario": args.scenario, "av_percent": args.av_percent,
                      "relative_gap": res.relative_gap, "converged": res.converged,
                      "passes": res.iteration_count, **dataclasses.asdict(m)}, indent=2))


def _cmd_analytic(args):
    if args.lanes < 2:
        raise ValueError("a road with a dedicated AV lane needs at least 2 lanes")
    hw = HeadwayConfig(args.headway_av, args.headway_cv)
    n = args.lanes - 1
    out = {"lanes": args.lanes, "normal_lanes": n, "threshold": saturation_threshold(n, hw)}
    if args.flow is not None and args.p is not None:
        s = TwoLaneScenario(F=args.flow, p=args.p, l=args.length, v=args.speed, alpha=args.alpha,
                            beta=args.beta, hw=hw, N=n, period_h=args.period_h)
        sol = solve_two_lane(s)
        out.update({k: v for k, v in dataclasses.asdict(sol).items() if k != "threshold"})
        out["mean_time_with_lane"] = sol.mean_time
        out["time_without_lane"] = scenario2_time(s)
    print(json.dumps(out, indent=2))


def _cmd_transform(args):
    net = load_network(args.network)
    save_network(transform_av_lane(net, default_eligible(args.min_av_lane_length)), args.out)


def _cmd_gen_grid(args):
    net = grid_network(args.rows, args.cols, spacing_m=args.spacing, highway_corridor=args.highway_corridor)
    save_network(net, args.out)
    if args.od_out:
        save_od(grid_od(net, args.rows, args.cols), args.od_out, net)
    if args.config_out:
        if not args.od_out:
            raise ValueError("--config-out needs --od-out")
        where = os.path.dirname(os.path.abspath(args.config_out))
        with open(args.config_out, "w", encoding="utf-8") as fh:
            fh.write(f"[sweep]\nnetwork = {os.path.relpath(os.path.abspath(args.out), where)}\n"
                     f"od = {os.path.relpath(os.path.abspath(args.od_out), where)}\n"
                     "agents = 10000\nav_percents = 0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100\n"
                     "headways = 1.0\nseed = 0\n\n"
                     f"[assignment]\nperiod_h = {GRID_PERIOD_H}\ngap_tolerance = {GRID_GAP}\n"
                     f"max_passes = {GRID_MAX_PASSES}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="simulate", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="run an AV-percentage sweep from a config file")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="results")
    s.add_argument("--per-link", action="store_true", help="also write per-segment throughput")
    s.add_argument("--parallel", action="store_true")
    s.set_defaults(func=_cmd_sweep)

    s = sub.add_parser("assign", help="assign one population on one network")
    s.add_argument("--network", required=True)
    s.add_argument("--od", required=True)
    s.add_argument("--av-percent", type=float, required=True)
    s.add_argument("--scenario", choices=["with-av-lane", "no-av-lane"], required=True)
    s.add_argument("--agents", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--period-h", type=float, default=1.0)
    s.add_argument("--headway-av", type=float, default=1.0)
    s.add_argument("--headway-cv", type=float, default=1.8)
    s.add_argument("--batch-count", type=int, default=20)
    s.add_argument("--max-passes", type=int, default=5)
    s.add_argument("--gap-tolerance", type=float, default=1e-3)
    s.add_argument("--min-av-lane-length", type=float, default=0.0)
    s.add_argument("--out", help="directory for links.csv and agents.csv")
    s.set_defaults(func=_cmd_assign)

    s = sub.add_parser("analytic", help="closed-form single-road solution as JSON")
    s.add_argument("--lanes", type=int, required=True, help="total lanes including the AV lane")
    s.add_argument("--headway-av", type=float, default=1.0)
    s.add_argument("--headway-cv", type=float, default=1.8)
    s.add_argument("--flow", type=float)
    s.add_argument("--p", type=float)
    s.add_argument("--length", type=float, default=10_000.0)
    s.add_argument("--speed", type=float, default=25.0)
    s.add_argument("--alpha", type=float, default=0.15)
    s.add_argument("--beta", type=float, default=4.0)
    s.add_argument("--period-h", type=float, default=1.0)
    s.set_defaults(func=_cmd_analytic)

    s = sub.add_parser("transform", help="add dedicated AV lanes to a network file")
    s.add_argument("--network", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--min-av-lane-length", type=float, default=0.0)
    s.set_defaults(func=_cmd_transform)

    s = sub.add_parser("gen-grid", help="write a synthetic grid network")
    s.add_argument("--rows", type=int, required=True)
    s.add_argument("--cols", type=int, required=True)
    s.add_argument("--highway-corridor", action="store_true")
    s.add_argument("--spacing", type=float, default=500.0)
    s.add_argument("--out", default="grid.csv")
    s.add_argument("--od-out", help="also write a matching OD matrix")
    s.add_argument("--config-out", help="also write a sweep config for the generated files")
    s.set_defaults(func=_cmd_gen_grid)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (NetworkError, DemandError, ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"simulate: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (RoutingError, OSError, RuntimeError) as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
