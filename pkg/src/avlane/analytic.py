"""Closed-form equilibrium of one road with a dedicated AV lane next to N normal lanes.

Derivation used here. Put ``f1`` vehicles (all AVs) on the AV lane and
``f2 = F - f1`` on the normal side, where the N lanes share flow evenly. The
normal side then carries every CV plus ``pF - f1`` AVs, so its per-lane load
in lane-seconds of headway is

    (h_av (pF - f1) + h_cv F (1 - p)) / N

and the AV lane's is ``f1 h_av``. Equal BPR times on both sides need equal
loads, which gives

    f1 = F (h_av p + h_cv (1 - p)) / ((N + 1) h_av).

That flow is only feasible while ``f1 <= pF``; solving the bound for p gives
the saturation threshold ``h_cv / (N h_av + h_cv)``. Below it all AVs ride
the AV lane and it stays faster than the normal lanes.

The shared load ``F (h_av p + h_cv (1 - p)) / (N + 1)`` is exactly the per-lane
load when all vehicles spread over all N + 1 lanes with no reservation, so
past the threshold both policies give the same travel time.
"""

from __future__ import annotations

from dataclasses import dataclass

from .cost import SECONDS_PER_HOUR, HeadwayConfig, bpr


@dataclass(frozen=True)
class TwoLaneScenario:
    F: float
    p: float
    l: float = 10_000.0
    v: float = 25.0
    alpha: float = 0.15
    beta: float = 4.0
    hw: HeadwayConfig = HeadwayConfig()
    N: int = 1
    period_h: float = 1.0

    def __post_init__(self):
        if not self.F > 0:
            raise ValueError("F must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.N < 1:
            raise ValueError("need at least one normal lane")
        if self.period_h <= 0:
            raise ValueError("period_h must be positive")

    def time_for_load(self, lane_load_s: float) -> float:
        """BPR time for a per-lane load expressed in headway-seconds per period."""
        return self.l / self.v * (1.0 + self.alpha * (lane_load_s / (SECONDS_PER_HOUR * self.period_h)) ** self.beta)


@dataclass(frozen=True)
class TwoLaneSolution:
    f1: float
    f2: float
    t1: float
    t2: float
    saturated: bool
    t_av: float
    t_cv: float
    threshold: float

    @property
    def mean_time(self) -> float:
        """Flow-weighted mean over all vehicles."""
        return (self.f1 * self.t1 + self.f2 * self.t2) / (self.f1 + self.f2)


def saturation_threshold(N: int = 1, hw: HeadwayConfig = HeadwayConfig()) -> float:
    """AV share at which the dedicated lane next to ``N`` normal lanes saturates."""
    if N < 1:
        raise ValueError("need at least one normal lane")
    return hw.h_cv / (N * hw.h_av + hw.h_cv)


def _shared_load(s: TwoLaneScenario) -> float:
    return s.F / (s.N + 1) * (s.hw.h_av * s.p + s.hw.h_cv * (1.0 - s.p))


def solve_two_lane(s: TwoLaneScenario) -> TwoLaneSolution:
    h_av, h_cv = s.hw.h_av, s.hw.h_cv
    tau = saturation_threshold(s.N, s.hw)
    if s.p >= tau:
        f1 = _shared_load(s) / h_av
        # each side evaluated from its own flows
        t1 = s.time_for_load(f1 * h_av)
        t2 = s.time_for_load((h_av * (s.p * s.F - f1) + h_cv * s.F * (1.0 - s.p)) / s.N)
        n_av = s.p * s.F
        t_av = (f1 * t1 + (n_av - f1) * t2) / n_av
        return TwoLaneSolution(f1=f1, f2=s.F - f1, t1=t1, t2=t2, saturated=True,
                               t_av=t_av, t_cv=t2, threshold=tau)
    f1 = s.p * s.F
    f2 = s.F - f1
    # normal lanes hold CVs only
    t1 = bpr(s.l / s.v, f1, SECONDS_PER_HOUR / h_av, 1, s.period_h, s.alpha, s.beta)
    t2 = bpr(s.l / s.v, f2, SECONDS_PER_HOUR / h_cv, s.N, s.period_h, s.alpha, s.beta)
    return TwoLaneSolution(f1=f1, f2=f2, t1=t1, t2=t2, saturated=False,
                           t_av=t1, t_cv=t2, threshold=tau)


def scenario2_time(s: TwoLaneScenario) -> float:
    """Travel time when every vehicle may use all N + 1 lanes."""
    return s.time_for_load(_shared_load(s))
