import csv
import dataclasses
import json
import os

import pytest

from avlane.assignment import AssignmentConfig
from avlane.demand import save_od
from avlane.network import save_network
from avlane.sweep import (ConfigError, Scenario, SweepConfig, emit_report, load_config, run_sweep)
from avlane.synthetic import grid_network, grid_od

PCTS = (0.0, 50.0, 100.0)


@pytest.fixture(scope="module")
def small():
    net = grid_network(4, 4)
    return SweepConfig(network=net, od=grid_od(net, 4, 4), agents=600, av_percents=PCTS,
                       headways=(1.0, 0.5), seed=3, assignment=AssignmentConfig(period_h=0.2))


@pytest.fixture(scope="module")
def report(small):
    return run_sweep(small)


def test_every_cell_present(report):
    assert len(report.cells) == 2 * 3 * 2
    for cell in report.cells.values():
        assert cell.flows_conserved and cell.cv_on_av_lanes == 0
        assert cell.metrics.n_all == 600


def test_one_population_across_cells(report):
    fps = {c.demand_fingerprint for c in report.cells.values()}
    assert len(fps) == 1
    for p in PCTS:
        a = report.cell(Scenario.WITH_AV_LANE, p)
        b = report.cell(Scenario.NO_AV_LANE, p)
        assert a.population_fingerprint == b.population_fingerprint
    av = [report.cell(Scenario.NO_AV_LANE, p).assignment.agent_is_av for p in PCTS]
    assert all((av[i] <= av[i + 1]).all() for i in range(len(av) - 1))


def test_emit_is_byte_identical(small, report, tmp_path):
    a = emit_report(report, tmp_path / "a", per_link=True)
    b = emit_report(run_sweep(small), tmp_path / "b", per_link=True)
    assert [os.path.basename(p) for p in a] == [os.path.basename(p) for p in b]
    for pa, pb in zip(a, b):
        if pa.endswith("manifest.json"):
            ma, mb = (json.loads(open(x).read()) for x in (pa, pb))
            ma.pop("created"), mb.pop("created")
            assert ma == mb
        else:
            assert open(pa, "rb").read() == open(pb, "rb").read(), pa


def test_emitted_tables(report, tmp_path):
    emit_report(report, tmp_path)
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(report.cells)
    assert {r["scenario"] for r in rows} == {"with-av-lane", "no-av-lane"}
    with open(tmp_path / "series" / "avg_time_all.csv") as fh:
        series = list(csv.reader(fh))
    assert series[0][0] == "av_percent" and len(series) == 1 + len(PCTS)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 3 and "code_version" in manifest and "config" in manifest
    assert not [f for f in os.listdir(tmp_path) if f.endswith(".tmp")]


def test_single_scenario_sweep():
    net = grid_network(3, 3)
    cfg = SweepConfig(network=net, od=grid_od(net, 3, 3), agents=100, av_percents=(0.0, 100.0),
                      scenarios=(Scenario.NO_AV_LANE,), assignment=AssignmentConfig(period_h=0.2))
    rep = run_sweep(cfg)
    assert len(rep.cells) == 2 and rep.demand_deltas == {}


def test_config_rejections():
    net = grid_network(3, 3)
    od = grid_od(net, 3, 3)
    with pytest.raises(ConfigError):
        SweepConfig(network=net, od=od, scenarios=())
    with pytest.raises(ConfigError):
        SweepConfig(network=net, od=od, av_percents=(120.0,))
    with pytest.raises(ValueError):
        SweepConfig(network=net, od=od, headways=(2.5,))


def test_load_ini_and_json(tmp_path):
    net = grid_network(3, 3)
    save_network(net, tmp_path / "net.csv")
    save_od(grid_od(net, 3, 3), tmp_path / "od.csv", net)
    (tmp_path / "run.ini").write_text(
        "[sweep]\nnetwork = net.csv\nod = od.csv\nagents = 50\nav_percents = 0, 50\n"
        "headways = 1.0, 0.75\nscenarios = no-av-lane\nseed = 4\n"
        "[assignment]\nperiod_h = 0.5\nmax_passes = 2\n[fuel]\nidle_rate = 0.6\n")
    cfg = load_config(tmp_path / "run.ini")
    assert cfg.agents == 50 and cfg.av_percents == (0.0, 50.0) and cfg.headways == (1.0, 0.75)
    assert cfg.scenarios == (Scenario.NO_AV_LANE,) and cfg.assignment.period_h == 0.5
    assert cfg.fuel.idle_rate == 0.6 and cfg.network == str(tmp_path / "net.csv")
    (tmp_path / "run.json").write_text(json.dumps(
        {"sweep": {"network": "net.csv", "od": "od.csv", "agents": 50, "av_percents": [0, 100]}}))
    assert load_config(tmp_path / "run.json").av_percents == (0.0, 100.0)
    (tmp_path / "bad.ini").write_text("[sweep]\nnetwork = net.csv\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.ini")
    (tmp_path / "bad2.ini").write_text("[sweep]\nnetwork = net.csv\nod = od.csv\nscenarios = sideways\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad2.ini")


def test_parallel_matches_sequential(small, report, tmp_path):
    par = run_sweep(dataclasses.replace(small, parallel=True))
    emit_report(report, tmp_path / "seq")
    emit_report(par, tmp_path / "par")
    for name in ("summary.csv", "demand_delta.csv", "throughput.csv"):
        assert (tmp_path / "seq" / name).read_bytes() == (tmp_path / "par" / name).read_bytes()
