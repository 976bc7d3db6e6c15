import json

import pytest
from hypothesis import given, settings, strategies as st

from avlane.network import (LanePolicy, NetworkParseError, NetworkValidationError, RoadClass,
                            TransformError, build_network, classify_links, default_eligible,
                            load_network, save_network, transform_av_lane)
from avlane.synthetic import grid_network, single_road

from conftest import make_link

MINIMAL = b"""record,id,from,to,length_m,lanes,speed_mps,class,alpha,beta
node,A
node,B
link,L1,A,B,1000,2,25,highway,,
"""

DIAMOND = """record,id,from,to,length_m,lanes,speed_mps,class,alpha,beta
node,s
node,a
node,b
node,t
link,sa,s,a,500,1,15,major,0.15,4
link,at,a,t,500,1,15,major,0.15,4
link,sb,s,b,500,1,15,other,0.15,4
link,bt,b,t,500,1,15,other,0.15,4
"""


def test_load_minimal():
    net = load_network(MINIMAL)
    assert net.n_nodes == 2 and net.n_links == 1
    link = net.links[0]
    assert (link.length_m, link.lanes, link.speed_mps) == (1000.0, 2, 25.0)
    assert link.road_class is RoadClass.HIGHWAY
    assert (link.alpha, link.beta) == (0.15, 4.0)
    assert net.node_labels == ("A", "B") and link.label == "L1"


def test_load_diamond_from_file(tmp_path):
    path = tmp_path / "diamond.csv"
    path.write_text(DIAMOND)
    net = load_network(path)
    assert net.n_nodes == 4 and net.n_links == 4
    assert net.outgoing[net.node_id("s")] == (0, 2)


def test_undeclared_node_is_rejected():
    bad = MINIMAL.replace(b"A,B,1000", b"A,C,1000")
    with pytest.raises(NetworkValidationError, match="L1"):
        load_network(bad)


def test_malformed_record_reports_line():
    bad = MINIMAL + b"link,L2,A,B,notanumber,2,25,highway,,\n"
    with pytest.raises(NetworkParseError) as err:
        load_network(bad)
    assert err.value.record == 5


def test_unknown_class_rejected():
    with pytest.raises(NetworkParseError):
        load_network(MINIMAL.replace(b"highway", b"freeway"))


def test_json_equivalent(tmp_path):
    doc = {"nodes": [{"id": "A"}, {"id": "B"}],
           "links": [{"id": "L1", "from": "A", "to": "B", "length_m": 1000, "lanes": 2,
                      "speed_mps": 25, "class": "highway"}]}
    path = tmp_path / "net.json"
    path.write_text(json.dumps(doc))
    a, b = load_network(path), load_network(MINIMAL)
    assert a.links == b.links and a.node_labels == b.node_labels


def test_save_roundtrip_keeps_av_lanes(tmp_path):
    net = transform_av_lane(grid_network(3, 3))
    for ext in ("csv", "json"):
        path = tmp_path / f"t.{ext}"
        save_network(net, path)
        back = load_network(path)
        assert back.links == net.links
        assert back.node_source == net.node_source


def test_validation_rules():
    with pytest.raises(NetworkValidationError):
        build_network(["a", "b"], [make_link("x", "a", "b", length=0)])
    with pytest.raises(NetworkValidationError):
        build_network(["a", "b"], [make_link("x", "a", "b", beta=0.5)])
    with pytest.raises(NetworkValidationError):
        build_network(["a", "b"], [make_link("x", "a", "b", lanes=0)])


def test_transform_three_lane_highway():
    net = single_road(lanes=3)
    out = transform_av_lane(net)
    assert out.n_nodes == 4 and out.n_links == 4
    orig, av, c_in, c_out = out.links
    assert orig.lanes == 2 and orig.policy is LanePolicy.MIXED
    assert av.lanes == 1 and av.policy is LanePolicy.AV_ONLY and av.source_link == orig.id
    assert (av.length_m, av.speed_mps, av.alpha, av.beta) == (orig.length_m, orig.speed_mps, orig.alpha, orig.beta)
    assert c_in.policy is c_out.policy is LanePolicy.CONNECTOR
    assert c_in.from_node == orig.from_node and c_in.to_node == av.from_node
    assert c_out.from_node == av.to_node and c_out.to_node == orig.to_node
    assert c_in.free_flow_time == 0.0 and c_in.length_m == 0.0
    assert out.node_source[av.from_node] == orig.from_node
    assert out.node_source[av.to_node] == orig.to_node
    # input untouched
    assert net.links[0].lanes == 3 and net.n_links == 1


def test_transform_two_lane_matches_single_road_setting():
    out = transform_av_lane(single_road(lanes=2))
    assert [l.lanes for l in out.links[:2]] == [1, 1]
    assert [l.policy for l in out.links[:2]] == [LanePolicy.MIXED, LanePolicy.AV_ONLY]


def test_transform_empty_selection_is_identity(mixed_classes):
    out = transform_av_lane(mixed_classes, lambda link: False)
    assert out == mixed_classes


def test_transform_rejects_single_lane_with_custom_predicate():
    net = single_road(lanes=1)
    with pytest.raises(TransformError):
        transform_av_lane(net, lambda link: True)
    # default predicate skips it instead
    assert transform_av_lane(net) == net


def test_transform_rejects_non_highway(mixed_classes):
    with pytest.raises(TransformError):
        transform_av_lane(mixed_classes, lambda link: link.road_class is RoadClass.MAJOR)


def test_transform_rejects_already_transformed_links():
    once = transform_av_lane(single_road(lanes=3))
    with pytest.raises(TransformError):
        transform_av_lane(once, lambda link: link.policy is not LanePolicy.MIXED)
    with pytest.raises(TransformError):
        transform_av_lane(once, lambda link: link.road_class is RoadClass.HIGHWAY)
    assert transform_av_lane(once) == once


def test_min_length_knob():
    net = grid_network(3, 3, spacing_m=400)
    assert transform_av_lane(net, default_eligible(500.0)) == net
    assert transform_av_lane(net, default_eligible(400.0)).n_links > net.n_links


def test_classify_links(mixed_classes):
    groups = classify_links(mixed_classes)
    assert groups == {RoadClass.HIGHWAY: (0,), RoadClass.MAJOR: (1,), RoadClass.OTHER: (2,)}
    assert classify_links(single_road()) == {RoadClass.HIGHWAY: (0,)}
    t = transform_av_lane(single_road())
    assert classify_links(t) == {RoadClass.HIGHWAY: (0, 1)}


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(2, 5), cols=st.integers(2, 5), data=st.data())
def test_transform_counts_and_reachability(rows, cols, data):
    net = grid_network(rows, cols)
    hw = [l.id for l in net.links if l.road_class is RoadClass.HIGHWAY]
    chosen = set(data.draw(st.lists(st.sampled_from(hw), unique=True)) if hw else [])
    out = transform_av_lane(net, lambda link: link.id in chosen)
    assert out.n_nodes == net.n_nodes + 2 * len(chosen)
    assert out.n_links == net.n_links + 3 * len(chosen)
    for lid in chosen:
        twin = [l for l in out.links if l.policy is LanePolicy.AV_ONLY and l.source_link == lid]
        assert len(twin) == 1
        assert out.links[lid].lanes + twin[0].lanes == net.links[lid].lanes
    part = classify_links(out)
    covered = sorted(i for ids in part.values() for i in ids)
    assert covered == sorted(l.id for l in out.links if l.policy is not LanePolicy.CONNECTOR)
    for origin in range(net.n_nodes):
        before = net.reachable(origin)
        for av in (True, False):
            assert before <= out.reachable(origin, av)


def test_strong_connectivity_check():
    assert grid_network(3, 3).is_strongly_connected()
    assert not single_road().is_strongly_connected()
    t = transform_av_lane(grid_network(4, 4))
    assert t.is_strongly_connected(av=True)
