import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avlane.demand import (DemandError, ODMatrix, VehicleClass, av_count, dump_population,
                           generate_population, load_od, reclass_population, save_od)
from avlane.synthetic import grid_network, grid_od


def test_single_pair_half_av():
    pop = generate_population(ODMatrix(((0, 1, 1.0),)), 10, 0.5, seed=3)
    assert len(pop) == 10
    assert all(a.origin == 0 and a.destination == 1 for a in pop.agents)
    assert sum(a.vclass is VehicleClass.AV for a in pop.agents) == 5


def test_deterministic():
    od = ODMatrix(((0, 1, 1.0), (1, 2, 2.0), (2, 0, 0.5)))
    a = generate_population(od, 500, 0.3, seed=11)
    b = generate_population(od, 500, 0.3, seed=11)
    assert a.fingerprint() == b.fingerprint()
    assert a.agents == b.agents
    assert generate_population(od, 500, 0.3, seed=12).fingerprint() != a.fingerprint()


def test_weighted_sampling_concentration():
    od = ODMatrix(((0, 1, 3.0), (1, 0, 1.0)))
    pop = generate_population(od, 40_000, 0.0, seed=5)
    count = int(np.sum(pop.origins == 0))
    # binomial(40000, 3/4): the expectation is 30000, sd about 87
    assert abs(count - 30_000) <= 300


def test_skips_self_loops_and_rejects_empty(caplog):
    od = ODMatrix(((0, 0, 5.0), (0, 1, 1.0)))
    pop = generate_population(od, 20, 0.0, seed=0)
    assert np.all(pop.origins != pop.destinations)
    assert "origin == destination" in caplog.text
    with pytest.raises(DemandError):
        generate_population(ODMatrix(()), 5, 0.0, 0)
    with pytest.raises(DemandError):
        generate_population(ODMatrix(((1, 1, 1.0),)), 5, 0.0, 0)


def test_rounding_half_up():
    assert av_count(0.5, 5) == 3
    assert av_count(0.35, 10) == 4
    assert av_count(0.1, 309_000) == 30_900
    assert av_count(0.0, 7) == 0 and av_count(1.0, 7) == 7


def test_reclass_extremes_and_nesting():
    od = ODMatrix(((0, 1, 1.0), (1, 0, 1.0)))
    pop = generate_population(od, 101, 0.2, seed=9)
    assert reclass_population(pop, 0.0).n_av == 0
    assert reclass_population(pop, 1.0).n_av == 101
    lo, hi = reclass_population(pop, 0.3), reclass_population(pop, 0.5)
    assert np.all(hi.is_av[lo.is_av])
    assert np.array_equal(lo.origins, pop.origins) and np.array_equal(lo.destinations, pop.destinations)
    assert lo.demand_fingerprint() == pop.demand_fingerprint()


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), fracs=st.lists(st.floats(0, 1), min_size=2, max_size=6), seed=st.integers(0, 10**6))
def test_class_counts_exact_and_nested(n, fracs, seed):
    pop = generate_population(ODMatrix(((0, 1, 1.0),)), n, 0.0, seed)
    prev = None
    for f in sorted(fracs):
        cur = reclass_population(pop, f)
        assert cur.n_av == av_count(f, n)
        if prev is not None:
            assert np.all(cur.is_av[prev.is_av])
        prev = cur


def test_od_file_roundtrip(tmp_path):
    net = grid_network(3, 3)
    od = grid_od(net, 3, 3)
    path = tmp_path / "od.csv"
    save_od(od, path, net)
    back = load_od(path, net)
    assert back == od


def test_od_file_errors(tmp_path):
    net = grid_network(2, 2)
    path = tmp_path / "od.csv"
    path.write_text("origin,destination\nr0c0,r1c1\n")
    with pytest.raises(DemandError):
        load_od(path, net)
    path.write_text("origin,destination,weight\nr0c0,nowhere,1\n")
    with pytest.raises(DemandError):
        load_od(path, net)


def test_population_dump(tmp_path):
    pop = generate_population(ODMatrix(((0, 1, 1.0),)), 4, 0.5, seed=1)
    path = tmp_path / "pop.csv"
    dump_population(pop, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "agent_id,origin,destination,class"
    assert len(lines) == 5 and sum(l.endswith(",AV") for l in lines) == 2
