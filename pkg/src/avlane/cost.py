"""Mixed-traffic lane capacity, BPR link travel time and trip fuel use."""

from __future__ import annotations

from dataclasses import dataclass

from .network import LanePolicy, Link

SECONDS_PER_HOUR = 3600.0


@dataclass(frozen=True)
class HeadwayConfig:
    """Time gaps (s) kept by autonomous and conventional vehicles."""

    h_av: float = 1.0
    h_cv: float = 1.8

    def __post_init__(self):
        if not 0.3 <= self.h_av <= 3.0:
            raise ValueError(f"h_av must lie in [0.3, 3.0], got {self.h_av}")
        if not 0.3 <= self.h_cv <= 5.0:
            raise ValueError(f"h_cv must lie in [0.3, 5.0], got {self.h_cv}")
        if self.h_av > self.h_cv:
            raise ValueError("h_av must not exceed h_cv")


@dataclass(frozen=True)
class FuelModelParams:
    """Linear idle-plus-running fuel model: liters per hour driven and per km."""

    idle_rate: float = 0.5
    distance_rate: float = 0.07

    def __post_init__(self):
        for name in ("idle_rate", "distance_rate"):
            v = getattr(self, name)
            if not (v >= 0 and v != float("inf")):
                raise ValueError(f"{name} must be finite and non-negative")


@dataclass(frozen=True)
class LinkState:
    flow_av: int
    flow_cv: int
    p_av: float
    capacity_per_lane: float
    travel_time: float


def mixed_capacity(p_av: float, hw: HeadwayConfig = HeadwayConfig()) -> float:
    """Lane capacity in veh/h for a traffic mix with AV share ``p_av``."""
    if not 0.0 <= p_av <= 1.0:
        raise ValueError(f"p_av must lie in [0, 1], got {p_av}")
    return SECONDS_PER_HOUR / (hw.h_av * p_av + hw.h_cv * (1.0 - p_av))


def bpr(free_flow_time, flow, capacity_per_lane, lanes, period_h, alpha, beta):
    """Plain BPR volume-delay function; ``flow`` counts vehicles in ``period_h`` hours."""
    if flow <= 0:
        return free_flow_time
    x = flow / (capacity_per_lane * lanes * period_h)
    return free_flow_time * (1.0 + alpha * x ** beta)


def bpr_time(link: Link, total_flow: float, p_av: float,
             hw: HeadwayConfig = HeadwayConfig(), period_h: float = 1.0) -> float:
    """Traverse time (s) of ``link`` carrying ``total_flow`` vehicles over ``period_h``.

    Connectors always take zero time.
    """
    if total_flow < 0:
        raise ValueError("total_flow must be non-negative")
    if period_h <= 0:
        raise ValueError("period_h must be positive")
    if link.policy is LanePolicy.CONNECTOR:
        return 0.0
    return bpr(link.free_flow_time, total_flow, mixed_capacity(p_av, hw),
               link.lanes, period_h, link.alpha, link.beta)


def fuel_for_trip(distance_m: float, travel_time_s: float,
                  params: FuelModelParams = FuelModelParams()) -> float:
    """Fuel in liters burnt covering ``distance_m`` in ``travel_time_s``."""
    if distance_m < 0 or travel_time_s < 0:
        raise ValueError("distance and time must be non-negative")
    return (params.idle_rate * travel_time_s / SECONDS_PER_HOUR
            + params.distance_rate * distance_m / 1000.0)
