"""Macroscopic assignment model for dedicated autonomous-vehicle highway lanes."""

__version__ = "0.1.0"

from .analytic import TwoLaneScenario, TwoLaneSolution, saturation_threshold, scenario2_time, solve_two_lane
from .assignment import (AssignmentConfig, RouteAssignment, RoutingError, assign_incremental,
                         relative_gap, restricted_shortest_path)
from .cost import FuelModelParams, HeadwayConfig, bpr_time, fuel_for_trip, mixed_capacity
from .demand import (Agent, ODMatrix, Population, VehicleClass, generate_population, load_od,
                     reclass_population)
from .metrics import ClassMetrics, class_metrics, demand_delta, throughput_by_class
from .network import (LanePolicy, Link, RoadClass, RoadNetwork, classify_links, load_network,
                      save_network, transform_av_lane)
from .sweep import Scenario, SweepConfig, emit_report, load_config, run_sweep
from .synthetic import grid_benchmark, grid_network, grid_od, single_road, single_road_od
