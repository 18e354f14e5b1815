import json

import pytest

from collsched.errors import ValidationError
from collsched.topology import (Edge, Topology, dgx1, dgx2, hyper_edge_transform,
                                line, ndv2, ring, star, topology_from_json,
                                topology_to_json, validate_topology)


def test_star3_is_valid():
    assert validate_topology(star(3)) == []


def test_zero_capacity_flagged():
    t = Topology(("a", "b"), frozenset(), (Edge("a", "b", 0.0),))
    report = validate_topology(t)
    assert len(report) == 1 and "non-positive capacity" in report[0]


def test_dangling_switch_flagged():
    t = Topology(("a", "b", "sw"), frozenset({"sw"}),
                 (Edge("a", "sw", 1.0), Edge("a", "b", 1.0)))
    assert any("no outgoing edge" in v for v in validate_topology(t))


def test_self_loop_and_duplicate_edges_flagged():
    t = Topology(("a", "b"), frozenset(),
                 (Edge("a", "a", 1.0), Edge("a", "b", 1.0), Edge("a", "b", 2.0)))
    report = validate_topology(t)
    assert any("self-loop" in v for v in report)
    assert any("duplicate edge" in v for v in report)


def test_dgx1_shape():
    t = dgx1()
    assert len(t.nodes) == 8
    assert len(t.edges) == 32  # 16 bidirectional links
    assert not t.switches
    fast = [e for e in t.edges if e.capacity == 50e9]
    slow = [e for e in t.edges if e.capacity == 25e9]
    assert len(fast) == len(slow) == 16
    assert all(e.alpha == 0.7e-6 for e in t.edges)
    # every GPU has degree 4 in each direction
    for n in t.nodes:
        assert len(t.out_edges(n)) == 4
        assert len(t.in_edges(n)) == 4


def test_ndv2_multi_chassis_switch_wiring():
    t = ndv2(chassis=4)
    assert len(t.nodes) == 33
    assert len(t.edges) == 4 * 32 + 8
    (sw,) = t.switches
    # chassis GPU 0 uplinks, switch downlinks into GPU 1
    assert {e.src for e in t.in_edges(sw)} == {0, 8, 16, 24}
    assert {e.dst for e in t.out_edges(sw)} == {1, 9, 17, 25}
    for e in t.in_edges(sw) + t.out_edges(sw):
        assert e.capacity == 12.5e9 and e.alpha == 1.3e-6


def test_dgx2_two_chassis():
    t = dgx2(chassis=2)
    assert len(t.nodes) == 34  # 16 GPUs + 1 switch per chassis
    cross = [e for e in t.edges if e.capacity == 12.5e9]
    assert len(cross) == 16  # 8 unidirectional links each way
    assert all(e.alpha == 2.6e-6 for e in cross)
    within = [e for e in t.edges if e.capacity == 125e9]
    assert len(within) == 2 * 32


def test_line_and_ring_shapes():
    assert len(line(5).edges) == 8
    assert len(ring(5).edges) == 10


def test_json_round_trip(tmp_path):
    t = ndv2(chassis=2)
    doc = topology_to_json(t)
    text = json.dumps(doc, sort_keys=True)
    again = topology_from_json(json.loads(text))
    assert again == t


def test_capacity_override_round_trip():
    t = Topology(("a", "b"), frozenset(), (Edge("a", "b", 4.0),),
                 {("a", "b", 2): 1.0})
    again = topology_from_json(topology_to_json(t))
    assert again.capacity_at(again.edges[0], 2) == 1.0
    assert again.capacity_at(again.edges[0], 0) == 4.0


class TestHyperEdgeTransform:
    def test_four_gpus_behind_one_switch(self):
        nodes = (0, 1, 2, 3, "sw")
        edges = []
        for g in range(4):
            edges += [Edge(g, "sw", 1.0), Edge("sw", g, 1.0)]
        t = Topology(nodes, frozenset({"sw"}), tuple(edges))
        t_eff, groups = hyper_edge_transform(t)
        assert len(groups["sw"].pairs) == 12  # n(n-1) ordered pairs
        assert groups["sw"].budget == 4
        assert not t_eff.switches
        assert len(t_eff.edges) == 12

    def test_budget_is_min_degree(self):
        nodes = (0, 1, 2, 3, 4, 5, "sw")
        edges = [Edge(0, "sw", 1.0), Edge(1, "sw", 1.0)]
        edges += [Edge("sw", g, 1.0) for g in (2, 3, 4, 5)]
        t = Topology(nodes, frozenset({"sw"}), tuple(edges))
        _, groups = hyper_edge_transform(t)
        assert groups["sw"].budget == 2
        assert len(groups["sw"].pairs) == 8

    def test_single_pair_reduces_to_direct_link(self):
        t = Topology((0, 1, "sw"), frozenset({"sw"}),
                     (Edge(0, "sw", 2.0, 1e-6), Edge("sw", 1, 3.0, 2e-6)))
        t_eff, groups = hyper_edge_transform(t)
        assert groups["sw"].budget == 1
        assert groups["sw"].pairs == ((0, 1),)
        e = t_eff.edge(0, 1)
        assert e.capacity == 2.0  # tighter of the two legs
        assert e.alpha == pytest.approx(3e-6)

    def test_no_switches_is_identity(self):
        t = ring(4)
        t_eff, groups = hyper_edge_transform(t)
        assert t_eff is t and groups == {}

    def test_switch_without_egress_rejected(self):
        t = Topology((0, "sw"), frozenset({"sw"}), (Edge(0, "sw", 1.0),))
        with pytest.raises(ValidationError):
            hyper_edge_transform(t)
