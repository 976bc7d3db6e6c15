import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from avlane.cost import FuelModelParams, HeadwayConfig, bpr_time, fuel_for_trip, mixed_capacity
from avlane.network import Link, RoadClass

HW = HeadwayConfig(1.0, 1.8)


def road(length=1000.0, speed=20.0, lanes=1, alpha=0.15, beta=4.0):
    return Link(0, 0, 1, length, lanes, speed, RoadClass.HIGHWAY, alpha, beta)


def test_capacity_endpoints():
    assert mixed_capacity(0.0, HW) == 2000.0
    assert mixed_capacity(1.0, HW) == 3600.0


def test_capacity_half_mix():
    # 3600 / (0.5 * 1.0 + 0.5 * 1.8)
    assert mixed_capacity(0.5, HW) == pytest.approx(2571.4285714285716, rel=1e-15)


@pytest.mark.parametrize("p", [-0.01, 1.01, float("nan")])
def test_capacity_domain(p):
    with pytest.raises(ValueError):
        mixed_capacity(p, HW)


def test_headway_config_rules():
    assert HeadwayConfig() == HW
    with pytest.raises(ValueError):
        HeadwayConfig(2.0, 1.8)
    with pytest.raises(ValueError):
        HeadwayConfig(0.2, 1.8)


def test_bpr_free_flow():
    assert bpr_time(road(), 0, 0.3, HW) == 50.0


def test_bpr_at_capacity():
    link = road(lanes=2)
    cap = mixed_capacity(0.4, HW)
    f = cap * 2 * 1.5
    assert bpr_time(link, f, 0.4, HW, period_h=1.5) == pytest.approx(57.5, rel=1e-12)


def test_bpr_doubling_flow_scales_congestion_term():
    link = road()
    t0 = link.free_flow_time
    a = bpr_time(link, 800, 0.2, HW) - t0
    b = bpr_time(link, 1600, 0.2, HW) - t0
    assert b / a == pytest.approx(2 ** 4, rel=1e-12)


@given(st.floats(0, 5000), st.floats(0, 5000), st.floats(0, 1))
def test_bpr_increasing_in_flow(f, g, p):
    link = road()
    lo, hi = sorted((f, g))
    assert bpr_time(link, lo, p, HW) <= bpr_time(link, hi, p, HW)
    assert bpr_time(link, lo, p, HW) >= link.free_flow_time


@given(st.floats(1, 5000), st.floats(0, 1), st.floats(0, 1))
def test_bpr_non_increasing_in_av_share(f, p, q):
    lo, hi = sorted((p, q))
    assert bpr_time(road(), f, hi, HW) <= bpr_time(road(), f, lo, HW)


def test_bpr_convex_in_flow():
    link = road()
    f = np.linspace(0, 4000, 101)
    t = np.array([bpr_time(link, x, 0.3, HW) for x in f])
    assert np.all(np.diff(t, 2) > 0)


def test_fuel_examples():
    assert fuel_for_trip(0, 0) == 0.0
    params = FuelModelParams(idle_rate=1.0, distance_rate=0.08)
    assert fuel_for_trip(10_000, 1800, params) == pytest.approx(1.3, rel=1e-12)
    assert fuel_for_trip(5000, 900) > fuel_for_trip(5000, 600)


@given(st.floats(0, 1e5), st.floats(0, 1e5), st.floats(0, 1e4), st.floats(0, 1e4))
def test_fuel_additive_over_segments(d1, d2, t1, t2):
    assert math.isclose(fuel_for_trip(d1 + d2, t1 + t2),
                        fuel_for_trip(d1, t1) + fuel_for_trip(d2, t2), rel_tol=1e-12, abs_tol=1e-12)


def test_fuel_params_validation():
    with pytest.raises(ValueError):
        FuelModelParams(-1.0, 0.1)
