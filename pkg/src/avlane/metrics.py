"""Evaluation quantities computed from finished assignments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .assignment import RouteAssignment
from .cost import FuelModelParams, SECONDS_PER_HOUR
from .demand import Population
from .network import LanePolicy, RoadClass, RoadNetwork


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ClassMetrics:
    """Per-class averages; fields of a class with no vehicles are None."""

    n_all: int
    n_av: int
    n_cv: int
    avg_time_all: Optional[float]
    avg_time_av: Optional[float]
    avg_time_cv: Optional[float]
    fuel_total_all: float
    fuel_total_av: Optional[float]
    fuel_total_cv: Optional[float]
    avg_distance_all: Optional[float] = None


def _mean(x: np.ndarray) -> Optional[float]:
    return math.fsum(x.tolist()) / len(x) if len(x) else None


def class_metrics(assign: RouteAssignment, pop: Optional[Population] = None,
                  fuel: FuelModelParams = FuelModelParams()) -> ClassMetrics:
    """Average travel time and total fuel for all vehicles, AVs and CVs."""
    if pop is not None:
        if len(pop) != len(assign.routes):
            raise MetricsError("assignment does not cover the population")
        if pop.fingerprint() != assign.population_fingerprint:
            raise MetricsError("assignment was computed for a different population")
    times = assign.agent_times()
    dist = assign.agent_distances()
    # same arithmetic as cost.fuel_for_trip, vectorised
    litres = fuel.idle_rate * times / SECONDS_PER_HOUR + fuel.distance_rate * dist / 1000.0
    av = assign.agent_is_av.astype(bool)
    f_av = math.fsum(litres[av].tolist())
    f_cv = math.fsum(litres[~av].tolist())
    n_av, n_cv = int(av.sum()), int((~av).sum())
    return ClassMetrics(
        n_all=len(times), n_av=n_av, n_cv=n_cv,
        avg_time_all=_mean(times), avg_time_av=_mean(times[av]), avg_time_cv=_mean(times[~av]),
        fuel_total_all=f_av + f_cv,
        fuel_total_av=f_av if n_av else None,
        fuel_total_cv=f_cv if n_cv else None,
        avg_distance_all=_mean(dist),
    )


def segment_classes(net: RoadNetwork) -> dict[RoadClass, tuple[int, ...]]:
    """Physical segment ids per road class; AV lanes and connectors fold into their segment."""
    groups: dict[RoadClass, list[int]] = {}
    for link in net.links:
        if link.source_link is None:
            groups.setdefault(link.road_class, []).append(link.id)
    return {k: tuple(v) for k, v in groups.items()}


def _fold(net: RoadNetwork, per_link: np.ndarray) -> dict[int, int]:
    out: dict[int, int] = {}
    for link in net.links:
        if link.policy is LanePolicy.CONNECTOR:
            continue
        out[link.segment] = out.get(link.segment, 0) + int(per_link[link.id])
    return out


def segment_throughput(assign: RouteAssignment) -> dict[int, int]:
    """Vehicles per physical segment, AV lane and mixed lanes added together."""
    return _fold(assign.network, assign.flow)


def segment_demand(assign: RouteAssignment) -> dict[int, int]:
    """Number of agents whose route uses each physical segment."""
    return _fold(assign.network, assign.link_demand())


def _segments_of(net: RoadNetwork, classes) -> dict[RoadClass, set[int]]:
    out = {}
    for k, ids in classes.items():
        out[k] = {net.links[i].segment for i in ids if i < net.n_links}
    return out


def _class_sums(values: Mapping[int, int], segs: Mapping[RoadClass, set]) -> dict[RoadClass, int]:
    return {k: sum(values.get(s, 0) for s in ids) for k, ids in segs.items()}


def throughput_by_class(a: RouteAssignment, b: RouteAssignment,
                        classes: Optional[Mapping[RoadClass, tuple]] = None) -> dict[RoadClass, Optional[float]]:
    """Relative throughput change of ``a`` against baseline ``b`` per road class.

    Classes whose baseline throughput is zero map to None.
    """
    if classes is None:
        classes = segment_classes(b.network)
    segs = _segments_of(b.network, classes)
    fa = _class_sums(segment_throughput(a), segs)
    fb = _class_sums(segment_throughput(b), segs)
    return {k: (fa[k] - fb[k]) / fb[k] if fb[k] > 0 else None for k in segs}


def demand_delta(with_lane: RouteAssignment, without_lane: RouteAssignment,
                 classes: Optional[Mapping[RoadClass, tuple]] = None) -> dict[RoadClass, Optional[float]]:
    """Relative demand difference per road class, normalised by the AV-lane scenario.

    Negative values mean the class carries less demand once AV lanes exist.
    """
    if with_lane.population_fingerprint != without_lane.population_fingerprint:
        raise MetricsError("assignments were built from different populations")
    if classes is None:
        classes = segment_classes(without_lane.network)
    segs = _segments_of(without_lane.network, classes)
    da = _class_sums(segment_demand(with_lane), segs)
    db = _class_sums(segment_demand(without_lane), segs)
    return {k: (da[k] - db[k]) / da[k] if da[k] > 0 else None for k in segs}
