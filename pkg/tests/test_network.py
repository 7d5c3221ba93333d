import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SAINT_ARNOULT, write_csv
from oracles import closure_reachable
from routebench.errors import (
    DanglingEndpoint,
    DuplicateEdge,
    DuplicateNode,
    MissingFile,
    NonPositiveAttribute,
    ParseError,
    SelfLoop,
    UnknownEdge,
    UnknownNode,
)
from routebench.network import Edge, Node, RoadNetwork, free_flow_time, load_network, reachable, write_network

NODES = "id,x,y\nA,0,0\nB,100,0\n"


def _net_dir(tmp_path, edges, nodes=NODES):
    write_csv(tmp_path / "nodes.csv", nodes)
    write_csv(tmp_path / "edges.csv", "id,from,to,length_m,speed_mps,capacity_vps\n" + edges)
    return tmp_path


def test_single_edge_network(tmp_path):
    net = load_network(_net_dir(tmp_path, "e1,A,B,100,10,1\n"))
    assert list(net.edges) == ["e1"]
    assert net.edges["e1"].free_flow_time == 10.0
    assert net.adjacency["A"] == ("e1",)
    assert net.incoming["B"] == ("e1",)


def test_dangling_endpoint(tmp_path):
    with pytest.raises(DanglingEndpoint) as err:
        load_network(_net_dir(tmp_path, "e1,A,Z,100,10,1\n"))
    assert err.value.node_id == "Z"


@pytest.mark.parametrize("row,field", [
    ("e1,A,B,0,10,1", "length"),
    ("e1,A,B,100,-1,1", "speed"),
    ("e1,A,B,100,10,0", "capacity"),
    ("e1,A,B,100,10,nan", "capacity"),
])
def test_non_positive_attribute(tmp_path, row, field):
    with pytest.raises(NonPositiveAttribute) as err:
        load_network(_net_dir(tmp_path, row + "\n"))
    assert err.value.field == field


def test_duplicates_and_self_loop(tmp_path):
    with pytest.raises(DuplicateEdge):
        load_network(_net_dir(tmp_path, "e1,A,B,100,10,1\ne1,B,A,100,10,1\n"))
    with pytest.raises(SelfLoop):
        load_network(_net_dir(tmp_path, "e1,A,A,100,10,1\n"))
    with pytest.raises(DuplicateNode):
        load_network(_net_dir(tmp_path, "e1,A,B,100,10,1\n", nodes=NODES + "A,5,5\n"))


def test_parse_errors_carry_line(tmp_path):
    with pytest.raises(ParseError) as err:
        load_network(_net_dir(tmp_path, "e1,A,B,100,10,1\ne2,B,A,abc,10,1\n"))
    assert err.value.line == 3
    with pytest.raises(ParseError):
        load_network(_net_dir(tmp_path, "e1,A,B,100,10\n"))
    write_csv(tmp_path / "edges.csv", "id,source,target\n")
    with pytest.raises(ParseError) as err:
        load_network(tmp_path)
    assert err.value.line == 1


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_network(tmp_path)


@pytest.mark.parametrize("length,speed,expected", [(100, 10, 10.0), (250, 12.5, 20.0)])
def test_free_flow_time(length, speed, expected):
    net = RoadNetwork.build([Node("A"), Node("B")], [Edge("e", "A", "B", length, speed, 1.0)])
    assert free_flow_time(net, "e") == expected


def test_unknown_edge_and_node(sa_net):
    with pytest.raises(UnknownEdge):
        free_flow_time(sa_net, "nope")
    with pytest.raises(KeyError):
        free_flow_time(sa_net, "nope")
    with pytest.raises(UnknownNode):
        reachable(sa_net, "nope", "0000")


def test_fixture_counts_match_line_counts(sa_net):
    def lines(name):
        return sum(1 for ln in (SAINT_ARNOULT / name).read_text().splitlines() if ln.strip()) - 1

    assert len(sa_net.nodes) == lines("nodes.csv")
    assert len(sa_net.edges) == lines("edges.csv")
    assert len(sa_net.edges) >= 200


def test_free_flow_time_is_length_over_speed(sa_net):
    for e in sa_net.edges.values():
        assert e.free_flow_time > 0
        assert math.isclose(e.free_flow_time, e.length / e.speed, rel_tol=1e-15)


def test_load_is_pure(sa_net, tmp_path):
    assert load_network(SAINT_ARNOULT) == sa_net
    write_network(sa_net, tmp_path)
    assert load_network(tmp_path) == sa_net


def _chain():
    nodes = [Node(n) for n in "ABC"]
    return RoadNetwork.build(nodes, [Edge("ab", "A", "B", 1, 1, 1), Edge("bc", "B", "C", 1, 1, 1)])


def test_reachable_examples():
    net = _chain()
    assert reachable(net, "A", "A")
    assert reachable(net, "A", "C")
    assert not reachable(net, "C", "A")
    split = RoadNetwork.build([Node(n) for n in "ABCD"], [Edge("ab", "A", "B", 1, 1, 1), Edge("cd", "C", "D", 1, 1, 1)])
    assert not reachable(split, "A", "D")


@st.composite
def small_graphs(draw):
    n = draw(st.integers(1, 10))
    pairs = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda p: p[0] != p[1]), max_size=25))
    return n, sorted(pairs)


@settings(max_examples=200, deadline=None)
@given(small_graphs(), st.data())
def test_reachable_matches_closure_oracle(graph, data):
    n, pairs = graph
    net = RoadNetwork.build(
        [Node(str(i)) for i in range(n)],
        [Edge(f"{s}-{t}", str(s), str(t), 1.0, 1.0, 1.0) for s, t in pairs],
    )
    o = data.draw(st.integers(0, n - 1))
    d = data.draw(st.integers(0, n - 1))
    assert reachable(net, str(o), str(d)) == closure_reachable(n, pairs, o, d)
