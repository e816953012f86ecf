import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_net
from roadrobust.network import (BusRouteSet, NetworkFormatError, RoadNetwork, ZonePolygon,
                                bus_crossing_index, extract_zone, ingest_network, read_routes,
                                read_zones, write_network, write_routes, write_zones)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def files(tmp_path):
    nodes = _write(tmp_path / "nodes.csv", "id,x,y\n1,0,0\n2,10.5,0\n3,10.5,7.25\n")
    edges = _write(tmp_path / "edges.csv", "source,target,length\n1,2,10.5\n2,3,7.25\n")
    return nodes, edges


def test_ingest_minimal(files):
    net = ingest_network(*files)
    assert (net.n_nodes, net.n_edges) == (3, 2)
    assert net.nodes[2] == (10.5, 0.0)
    assert net.summary()["weak_components"] == 1
    assert net.summary()["strong_components"] == 3


def test_ingest_unknown_endpoint(files, tmp_path):
    edges = _write(tmp_path / "bad.csv", "source,target,length\n1,2,1\n2,99,3\n")
    with pytest.raises(NetworkFormatError, match=r"row 3.*99"):
        ingest_network(files[0], edges)


@pytest.mark.parametrize("body, match", [
    ("1,2,0\n", "non-positive"),
    ("1,2,-4\n", "non-positive"),
    ("1,1,3\n", "self-loop"),
    ("1,2,abc\n", "bad length"),
    ("1,2\n", "expected 3 fields"),
])
def test_ingest_bad_edge_rows(files, tmp_path, body, match):
    edges = _write(tmp_path / "bad.csv", "source,target,length\n" + body)
    with pytest.raises(NetworkFormatError, match=match):
        ingest_network(files[0], edges)


@pytest.mark.parametrize("body, match", [
    ("1,0,0\n1,2,2\n", "duplicate node id 1"),
    ("1,x,0\n", "bad x"),
    ("1,0,nan\n", "non-finite"),
])
def test_ingest_bad_node_rows(tmp_path, files, body, match):
    nodes = _write(tmp_path / "n.csv", "id,x,y\n" + body)
    with pytest.raises(NetworkFormatError, match=match):
        ingest_network(nodes, files[1])


def test_ingest_missing_file(tmp_path, files):
    with pytest.raises(FileNotFoundError, match="nope.csv"):
        ingest_network(files[0], tmp_path / "nope.csv")


def test_ingest_edge_id_column_and_parallel_edges(tmp_path, files):
    edges = _write(tmp_path / "e.csv", "source,target,length,edge_id\n1,2,5,70\n1,2,3,71\n")
    net = ingest_network(files[0], edges)
    assert net.edge_ids.tolist() == [70, 71]
    assert net.n_edges == 2


def test_round_trip(tmp_path, rng):
    from oracles import random_digraph

    net = random_digraph(rng, 25)
    write_network(net, tmp_path / "n.csv", tmp_path / "e.csv")
    again = ingest_network(tmp_path / "n.csv", tmp_path / "e.csv")
    assert again.equals(net)
    write_network(again, tmp_path / "n2.csv", tmp_path / "e2.csv")
    assert (tmp_path / "e.csv").read_bytes() == (tmp_path / "e2.csv").read_bytes()


def test_node_order_is_canonical():
    a = make_net({5: (0, 0), 2: (1, 1), 9: (2, 2)}, [(5, 9, 1.0)])
    b = make_net({9: (2, 2), 5: (0, 0), 2: (1, 1)}, [(5, 9, 1.0)])
    assert a.equals(b)
    assert a.node_ids.tolist() == [2, 5, 9]


# ---------------------------------------------------------------- zones

GRID4 = {1: (0.0, 0.0), 2: (1.0, 0.0), 3: (0.0, 1.0), 4: (1.0, 1.0), 5: (3.0, 3.0)}
GRID4_EDGES = [(1, 2, 1.0), (2, 1, 1.0), (1, 3, 1.0), (3, 4, 1.0), (4, 5, 2.0), (5, 4, 2.0), (2, 5, 3.0)]


def test_extract_unit_square_keeps_boundary_nodes():
    net = make_net({1: (0, 0), 2: (1, 0), 3: (0, 1), 4: (2, 2)},
                   [(1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 1, 1.0), (2, 4, 2.0)])
    square = ZonePolygon("unit", [(0, 0), (1, 0), (1, 1), (0, 1)])
    sub = extract_zone(net, square)
    assert sub.node_ids.tolist() == [1, 2, 3]
    assert sorted(zip(sub.sources.tolist(), sub.targets.tolist())) == [(1, 2), (2, 3)]
    assert sub.name == "unit"


def test_extract_identity_and_empty():
    net = make_net(GRID4, GRID4_EDGES)
    big = ZonePolygon("all", [(-10, -10), (10, -10), (10, 10), (-10, 10)])
    assert extract_zone(net, big).equals(net)
    far = ZonePolygon("none", [(100, 100), (101, 100), (101, 101)])
    empty = extract_zone(net, far)
    assert empty.n_nodes == 0 and empty.n_edges == 0


def test_degenerate_polygon_rejected():
    net = make_net(GRID4, GRID4_EDGES)
    with pytest.raises(ValueError, match="degenerate"):
        extract_zone(net, ZonePolygon("line", [(0, 0), (1, 1), (2, 2)]))
    with pytest.raises(ValueError):
        ZonePolygon("two", [(0, 0), (1, 1), (0, 0)])


def test_concave_polygon_membership():
    # L-shape: the notch corner (1.5, 1.5) is outside, edges and vertices inside
    poly = ZonePolygon("L", [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])
    pts = np.array([(0.5, 0.5), (1.5, 1.5), (1, 1.5), (2, 0.5), (0, 2), (1.5, 1.0), (2.5, 0.5)])
    assert poly.contains(pts[:, 0], pts[:, 1]).tolist() == [True, False, True, True, True, True, False]


coords = st.floats(-100, 100, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.tuples(coords, coords), min_size=3, max_size=6))
def test_extract_properties(seed, ring):
    rng = np.random.default_rng(seed)
    try:
        poly = ZonePolygon("p", ring)
    except ValueError:
        return
    if poly.area <= 1e-6:
        return
    n = 30
    pts = rng.uniform(-100, 100, (n, 2))
    s = rng.integers(0, n, 80)
    t = rng.integers(0, n, 80)
    keep = s != t
    net = RoadNetwork(np.arange(n), pts[:, 0], pts[:, 1], s[keep], t[keep], rng.uniform(1, 5, keep.sum()), None)
    sub = extract_zone(net, poly)
    # idempotent
    assert extract_zone(sub, poly).equals(sub)
    # induced-subgraph rule
    kept = set(sub.node_ids.tolist())
    expected = [(int(a), int(b)) for a, b in zip(net.sources, net.targets) if a in kept and b in kept]
    assert list(zip(sub.sources.tolist(), sub.targets.tolist())) == expected


def test_zone_file_formats(tmp_path):
    text = "north\n0 0\n10 0\n10 10\n0 10\n\nsouth\n0 -10\n10 -10\n10 0\n0 0\n"
    zones = read_zones(_write(tmp_path / "z.txt", text))
    assert [z.name for z in zones] == ["north", "south"]
    assert zones[1].ring == [(0.0, -10.0), (10.0, -10.0), (10.0, 0.0)] + [(0.0, 0.0)]
    assert zones[0].area == 100.0
    doc = {"type": "FeatureCollection", "features": [
        {"type": "Feature", "properties": {"name": "north"},
         "geometry": {"type": "Polygon", "coordinates": [[[0, 0], [10, 0], [10, 10], [0, 10], [0, 0]]]}}]}
    js = read_zones(_write(tmp_path / "z.geojson", json.dumps(doc)))
    assert js[0].ring == zones[0].ring
    write_zones(zones, tmp_path / "out.txt")
    assert [z.ring for z in read_zones(tmp_path / "out.txt")] == [z.ring for z in zones]


# ---------------------------------------------------------------- bus index

def test_bus_index_counts_visits(path3):
    assert bus_crossing_index(path3, BusRouteSet([])).values.tolist() == [0, 0, 0]
    routes = BusRouteSet([("a", [0, 1]), ("b", [1, 2]), ("loop", [0, 1, 0, 1])])
    table = bus_crossing_index(path3, routes)
    assert table.as_dict() == {0: 3.0, 1: 4.0, 2: 1.0}
    assert table.values.sum() == sum(len(seq) for _, seq in routes.routes)


def test_bus_index_unknown_node(path3):
    with pytest.raises(NetworkFormatError, match="unknown node id 42"):
        bus_crossing_index(path3, BusRouteSet([("x", [0, 42])]))
    with pytest.raises(NetworkFormatError, match="fewer than 2"):
        bus_crossing_index(path3, BusRouteSet([("x", [0])]))


def test_routes_csv_sorted_by_seq(tmp_path, path3):
    f = _write(tmp_path / "r.csv", "route_id,seq,node_id\nB,1,2\nA,2,2\nA,0,0\nB,0,1\nA,1,1\n")
    routes = read_routes(f)
    assert routes.routes == [("A", [0, 1, 2]), ("B", [1, 2])]
    write_routes(routes, tmp_path / "r2.csv")
    assert read_routes(tmp_path / "r2.csv").routes == routes.routes


@pytest.mark.slow
def test_ingest_city_scale(tmp_path):
    """43365 nodes / 109159 edges, the full-city counts."""
    n, m = 43365, 109159
    rng = np.random.default_rng(1)
    with open(tmp_path / "n.csv", "w") as fh:
        fh.write("id,x,y\n")
        for i, (a, b) in enumerate(rng.uniform(0, 30000, (n, 2))):
            fh.write(f"{i},{a:.3f},{b:.3f}\n")
    s = rng.integers(0, n, m + 100)
    t = (s + rng.integers(1, n, m + 100)) % n
    with open(tmp_path / "e.csv", "w") as fh:
        fh.write("source,target,length\n")
        for a, b in list(zip(s, t))[:m]:
            fh.write(f"{a},{b},{rng.uniform(5, 300):.2f}\n")
    net = ingest_network(tmp_path / "n.csv", tmp_path / "e.csv")
    assert net.summary()["nodes"] == n and net.summary()["edges"] == m
