"""Node centrality indices on weighted directed road multigraphs."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .network import BusRouteSet, RoadNetwork, bus_crossing_index
from .paths import ShortestPathView, sweep_all

log = logging.getLogger(__name__)

INDEX_NAMES = ("degree", "indegree", "outdegree", "closeness", "betweenness", "load", "bus")


@dataclass(frozen=True, eq=False)
class CentralityTable:
    index_name: str
    node_ids: np.ndarray
    values: np.ndarray
    normalized: bool
    n: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError(f"{self.index_name}: values must be finite and non-negative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "node_ids", np.asarray(self.node_ids, dtype=np.int64))

    def __getitem__(self, node_id: int) -> float:
        pos = np.searchsorted(self.node_ids, node_id)
        if pos >= len(self.node_ids) or self.node_ids[pos] != node_id:
            raise KeyError(node_id)
        return float(self.values[pos])

    def __len__(self) -> int:
        return len(self.node_ids)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.node_ids.tolist(), self.values.tolist()))


def _require(network: RoadNetwork, minimum: int, what: str):
    if network.n_nodes < minimum:
        raise ValueError(f"{what} needs at least {minimum} nodes, network has {network.n_nodes}")


def degree_centrality(network: RoadNetwork, direction: str = "total",
                      normalized: bool = True) -> CentralityTable:
    """Incident-edge counts; parallel edges each count once."""
    if direction not in ("total", "in", "out"):
        raise ValueError(f"direction must be total, in or out, not {direction!r}")
    n = network.n_nodes
    if normalized:
        _require(network, 2, "normalized degree")
    s, t = network.edge_index_arrays()
    indeg = np.bincount(t, minlength=n).astype(float)
    outdeg = np.bincount(s, minlength=n).astype(float)
    values = {"total": indeg + outdeg, "in": indeg, "out": outdeg}[direction]
    if normalized:
        values = values / (n - 1)
    name = {"total": "degree", "in": "indegree", "out": "outdegree"}[direction]
    return CentralityTable(name, network.node_ids, values, normalized, n)


def _closeness_from(dist_sum: np.ndarray, reach: np.ndarray, n: int, normalized: bool) -> np.ndarray:
    # reach counts the node itself
    others = reach - 1.0
    values = np.zeros(n)
    ok = (others > 0) & (dist_sum > 0)
    values[ok] = others[ok] / dist_sum[ok]
    if normalized:
        values = values * others / (n - 1)
    return values


def closeness_centrality(network: RoadNetwork, direction: str = "inward",
                         normalized: bool = True, threads: int | None = None,
                         view: ShortestPathView | None = None) -> CentralityTable:
    """Reciprocal mean shortest-path distance over the reachable set.

    ``inward`` uses distances from every node to i, ``outward`` from i to every
    node. Normalization applies the reachability factor (|R|-1)/(n-1).
    """
    if direction not in ("inward", "outward"):
        raise ValueError(f"direction must be inward or outward, not {direction!r}")
    _require(network, 2, "closeness")
    view = view or ShortestPathView.from_network(network)
    res = sweep_all(view, reverse=direction == "inward", want_paths=False, threads=threads)
    values = _closeness_from(res.dist_sum, res.reach, network.n_nodes, normalized)
    return CentralityTable("closeness", network.node_ids, values, normalized, network.n_nodes)


def _scale(n: int) -> float:
    return 1.0 / ((n - 1) * (n - 2))


def betweenness_centrality(network: RoadNetwork, normalized: bool = True,
                           threads: int | None = None,
                           view: ShortestPathView | None = None) -> CentralityTable:
    """Weighted shortest-path betweenness counting every co-optimal path."""
    if normalized:
        _require(network, 3, "normalized betweenness")
    view = view or ShortestPathView.from_network(network)
    res = sweep_all(view, reverse=True, threads=threads)
    values = res.between * _scale(network.n_nodes) if normalized else res.between
    return CentralityTable("betweenness", network.node_ids, values, normalized, network.n_nodes)


def load_centrality(network: RoadNetwork, normalized: bool = False,
                    threads: int | None = None,
                    view: ShortestPathView | None = None) -> CentralityTable:
    """Transit packet load.

    Every ordered pair sends one unit packet from source to target; at each
    node the packet splits evenly over the next hops that lie on a shortest
    path to the target. A node's load is the packet mass passing through it,
    excluding packets it sends or receives itself.
    """
    if normalized:
        _require(network, 3, "normalized load")
    view = view or ShortestPathView.from_network(network)
    res = sweep_all(view, reverse=True, threads=threads)
    values = res.load * _scale(network.n_nodes) if normalized else res.load
    return CentralityTable("load", network.node_ids, values, normalized, network.n_nodes)


def all_centralities(network: RoadNetwork, routes: BusRouteSet | None = None,
                     closeness_direction: str = "inward",
                     threads: int | None = None) -> list[CentralityTable]:
    """Degree family, closeness, betweenness, load and bus index in one pass.

    Betweenness and normalized degree/closeness use the usual normalizations;
    load stays raw. Inward closeness, betweenness and load share a single
    reversed sweep per node.
    """
    _require(network, 3, "all_centralities")
    n = network.n_nodes
    tables = [degree_centrality(network, d) for d in ("total", "in", "out")]
    view = ShortestPathView.from_network(network)
    res = sweep_all(view, reverse=True, threads=threads)
    if closeness_direction == "inward":
        dist_sum, reach = res.dist_sum, res.reach
    else:
        out = sweep_all(view, reverse=False, want_paths=False, threads=threads)
        dist_sum, reach = out.dist_sum, out.reach
    tables.append(CentralityTable("closeness", network.node_ids,
                                  _closeness_from(dist_sum, reach, n, True), True, n))
    tables.append(CentralityTable("betweenness", network.node_ids, res.between * _scale(n), True, n))
    tables.append(CentralityTable("load", network.node_ids, res.load, False, n))
    tables.append(bus_crossing_index(network, routes or BusRouteSet([])))
    return tables


def write_table(table: CentralityTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", table.index_name])
        for node, value in zip(table.node_ids, table.values):
            w.writerow([int(node), repr(float(value))])


def write_wide(tables: list[CentralityTable], path) -> None:
    """Wide CSV: one column per index, rows in node-id order."""
    ids = tables[0].node_ids
    for t in tables[1:]:
        if not np.array_equal(t.node_ids, ids):
            raise ValueError("tables cover different node sets")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id"] + [t.index_name for t in tables])
        for k, node in enumerate(ids):
            w.writerow([int(node)] + [repr(float(t.values[k])) for t in tables])


def read_wide(path) -> list[CentralityTable]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    ids = np.array([int(r[0]) for r in body], dtype=np.int64)
    tables = []
    for j, name in enumerate(header[1:], start=1):
        values = np.array([float(r[j]) for r in body])
        normalized = name not in ("load", "bus")
        tables.append(CentralityTable(name, ids, values, normalized, len(ids)))
    return tables
