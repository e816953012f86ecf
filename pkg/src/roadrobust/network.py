"""Spatial road network model, file ingestion and zone extraction."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)


class NetworkFormatError(ValueError):
    """Raised when an input file violates the network schema."""


@dataclass(frozen=True, eq=False)
class RoadNetwork:
    """Directed, weighted, spatially embedded multigraph.

    Nodes are kept sorted by id; ``x``/``y`` are projected coordinates in
    meters. Edges reference node ids, not positions.
    """

    node_ids: np.ndarray
    x: np.ndarray
    y: np.ndarray
    sources: np.ndarray
    targets: np.ndarray
    lengths: np.ndarray
    edge_ids: np.ndarray
    name: str = "network"
    directed: bool = True

    def __post_init__(self):
        ids = np.asarray(self.node_ids, dtype=np.int64)
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        if len(ids) and np.any(ids[1:] == ids[:-1]):
            dup = ids[1:][ids[1:] == ids[:-1]][0]
            raise NetworkFormatError(f"duplicate node id {dup}")
        if len(ids) and ids[0] < 0:
            raise NetworkFormatError(f"negative node id {ids[0]}")
        x = np.asarray(self.x, dtype=float)[order]
        y = np.asarray(self.y, dtype=float)[order]
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise NetworkFormatError("node coordinates must be finite")
        src = np.asarray(self.sources, dtype=np.int64)
        dst = np.asarray(self.targets, dtype=np.int64)
        lengths = np.asarray(self.lengths, dtype=float)
        eids = self.edge_ids
        eids = np.arange(len(src), dtype=np.int64) if eids is None else np.asarray(eids, dtype=np.int64)
        if not (len(src) == len(dst) == len(lengths) == len(eids)):
            raise NetworkFormatError("edge arrays differ in length")
        for arr in (src, dst):
            missing = np.setdiff1d(arr, ids)
            if len(missing):
                raise NetworkFormatError(f"edge references unknown node id {missing[0]}")
        if np.any(src == dst):
            raise NetworkFormatError(f"self-loop at node {src[src == dst][0]}")
        if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0):
            raise NetworkFormatError("edge lengths must be positive and finite")
        for name, value in (("node_ids", ids), ("x", x), ("y", y), ("sources", src),
                            ("targets", dst), ("lengths", lengths), ("edge_ids", eids)):
            object.__setattr__(self, name, value)
        for arr in (ids, x, y, src, dst, lengths, eids):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_edges(self) -> int:
        return len(self.sources)

    @property
    def nodes(self) -> dict[int, tuple[float, float]]:
        return {int(i): (float(a), float(b)) for i, a, b in zip(self.node_ids, self.x, self.y)}

    def index_of(self, node_ids) -> np.ndarray:
        """Positions of ``node_ids`` in the sorted node array."""
        ids = np.asarray(node_ids, dtype=np.int64)
        pos = np.searchsorted(self.node_ids, ids)
        pos = np.clip(pos, 0, max(self.n_nodes - 1, 0))
        if self.n_nodes == 0 or np.any(self.node_ids[pos] != ids):
            bad = ids if self.n_nodes == 0 else ids[self.node_ids[pos] != ids]
            raise KeyError(f"unknown node id {int(bad[0])}")
        return pos

    def coordinates(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    def edge_index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoints as node positions rather than ids."""
        if self.n_edges == 0:
            empty = np.zeros(0, dtype=np.int64)
            return empty, empty
        return self.index_of(self.sources), self.index_of(self.targets)

    def subgraph(self, keep_ids, name: str | None = None) -> "RoadNetwork":
        """Induced subgraph on ``keep_ids``; an edge survives iff both ends do."""
        keep = np.isin(self.node_ids, np.asarray(keep_ids, dtype=np.int64))
        kept_ids = self.node_ids[keep]
        emask = np.isin(self.sources, kept_ids) & np.isin(self.targets, kept_ids)
        return RoadNetwork(kept_ids, self.x[keep], self.y[keep], self.sources[emask],
                           self.targets[emask], self.lengths[emask], self.edge_ids[emask],
                           name=name or self.name)

    def component_counts(self) -> tuple[int, int]:
        """Number of (weak, strong) connected components."""
        n = self.n_nodes
        if n == 0:
            return 0, 0
        s, t = self.edge_index_arrays()
        adj = coo_matrix((np.ones(len(s)), (s, t)), shape=(n, n)).tocsr()
        weak, _ = connected_components(adj, directed=True, connection="weak")
        strong, _ = connected_components(adj, directed=True, connection="strong")
        return int(weak), int(strong)

    def summary(self) -> dict:
        weak, strong = self.component_counts()
        return {"name": self.name, "nodes": self.n_nodes, "edges": self.n_edges,
                "weak_components": weak, "strong_components": strong}

    def equals(self, other: "RoadNetwork") -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("node_ids", "x", "y", "sources", "targets", "lengths", "edge_ids"))

    def fingerprint(self) -> str:
        """Content hash over nodes and edges, independent of file formatting."""
        h = hashlib.sha256()
        for arr in (self.node_ids, self.x, self.y, self.sources, self.targets,
                    self.lengths, self.edge_ids):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class BusRouteSet:
    routes: list[tuple[str, list[int]]]

    def validate(self, network: RoadNetwork) -> None:
        for route_id, seq in self.routes:
            if len(seq) < 2:
                raise NetworkFormatError(f"route {route_id!r} has fewer than 2 nodes")
            try:
                network.index_of(seq)
            except KeyError as exc:
                raise NetworkFormatError(f"route {route_id!r}: {exc.args[0]}") from None


@dataclass(frozen=True)
class ZonePolygon:
    name: str
    ring: list[tuple[float, float]]

    def __post_init__(self):
        ring = [(float(a), float(b)) for a, b in self.ring]
        if len(ring) > 1 and ring[0] == ring[-1]:
            ring = ring[:-1]
        if len(set(ring)) < 3:
            raise ValueError(f"zone {self.name!r} needs at least 3 distinct vertices")
        object.__setattr__(self, "ring", ring)

    @property
    def area(self) -> float:
        xs, ys = np.array(self.ring).T
        return 0.5 * abs(np.dot(xs, np.roll(ys, -1)) - np.dot(ys, np.roll(xs, -1)))

    def contains(self, x, y, tol: float = 1e-9) -> np.ndarray:
        """Point-in-polygon test counting points on the boundary as inside."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        inside = np.zeros(x.shape, dtype=bool)
        on_edge = np.zeros(x.shape, dtype=bool)
        verts = self.ring
        for (x1, y1), (x2, y2) in zip(verts, verts[1:] + verts[:1]):
            cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
            seg = math.hypot(x2 - x1, y2 - y1)
            within = ((np.minimum(x1, x2) - tol <= x) & (x <= np.maximum(x1, x2) + tol)
                      & (np.minimum(y1, y2) - tol <= y) & (y <= np.maximum(y1, y2) + tol))
            on_edge |= within & (np.abs(cross) <= tol * max(seg, 1.0))
            crosses = (y1 > y) != (y2 > y)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (x < xint)
        return inside | on_edge


def extract_zone(network: RoadNetwork, polygon: ZonePolygon) -> RoadNetwork:
    if polygon.area <= 0:
        raise ValueError(f"zone {polygon.name!r} is degenerate (zero area)")
    mask = polygon.contains(network.x, network.y)
    return network.subgraph(network.node_ids[mask], name=polygon.name)


def bus_crossing_index(network: RoadNetwork, routes: BusRouteSet):
    """Number of route visits per node; repeated visits by one route all count."""
    from .centrality import CentralityTable

    routes.validate(network)
    counts = np.zeros(network.n_nodes)
    for _, seq in routes.routes:
        np.add.at(counts, network.index_of(seq), 1.0)
    return CentralityTable("bus", network.node_ids, counts, normalized=False, n=network.n_nodes)


# ---------------------------------------------------------------- file I/O

def _open_csv(path, expected: list[str], optional: tuple[str, ...] = ()):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    fh = path.open(newline="", encoding="utf-8")
    reader = csv.reader(fh)
    header = [h.strip() for h in next(reader, [])]
    if header[:len(expected)] != expected or any(h not in optional for h in header[len(expected):]):
        fh.close()
        raise NetworkFormatError(f"{path}: expected header {','.join(expected)}, got {','.join(header)}")
    return fh, reader, header


def _parse(value: str, kind, path, row_no: int, column: str):
    try:
        out = kind(value)
    except (TypeError, ValueError):
        raise NetworkFormatError(f"{path} row {row_no}: bad {column} value {value!r}") from None
    if kind is float and not math.isfinite(out):
        raise NetworkFormatError(f"{path} row {row_no}: non-finite {column} {value!r}")
    return out


def read_nodes(path) -> tuple[list[int], list[float], list[float]]:
    fh, reader, _ = _open_csv(path, ["id", "x", "y"])
    ids, xs, ys = [], [], []
    seen = set()
    with fh:
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise NetworkFormatError(f"{path} row {row_no}: expected 3 fields, got {len(row)}")
            node = _parse(row[0], int, path, row_no, "id")
            if node < 0:
                raise NetworkFormatError(f"{path} row {row_no}: negative node id {node}")
            if node in seen:
                raise NetworkFormatError(f"{path} row {row_no}: duplicate node id {node}")
            seen.add(node)
            ids.append(node)
            xs.append(_parse(row[1], float, path, row_no, "x"))
            ys.append(_parse(row[2], float, path, row_no, "y"))
    return ids, xs, ys


def ingest_network(node_file, edge_file, name: str | None = None) -> RoadNetwork:
    """Read and validate the nodes/edges CSV pair."""
    ids, xs, ys = read_nodes(node_file)
    known = set(ids)
    fh, reader, header = _open_csv(edge_file, ["source", "target", "length"], ("edge_id",))
    has_eid = len(header) == 4
    src, dst, lengths, eids = [], [], [], []
    with fh:
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise NetworkFormatError(
                    f"{edge_file} row {row_no}: expected {len(header)} fields, got {len(row)}")
            s = _parse(row[0], int, edge_file, row_no, "source")
            t = _parse(row[1], int, edge_file, row_no, "target")
            length = _parse(row[2], float, edge_file, row_no, "length")
            for node in (s, t):
                if node not in known:
                    raise NetworkFormatError(f"{edge_file} row {row_no}: unknown node id {node}")
            if s == t:
                raise NetworkFormatError(f"{edge_file} row {row_no}: self-loop at node {s}")
            if length <= 0:
                raise NetworkFormatError(f"{edge_file} row {row_no}: non-positive length {length}")
            src.append(s)
            dst.append(t)
            lengths.append(length)
            eids.append(_parse(row[3], int, edge_file, row_no, "edge_id") if has_eid else row_no - 2)
    net = RoadNetwork(ids, xs, ys, src, dst, lengths, eids, name=name or Path(node_file).stem)
    log.info("ingested %s: %d nodes, %d edges", net.name, net.n_nodes, net.n_edges)
    return net


def write_network(network: RoadNetwork, node_file, edge_file) -> None:
    with open(node_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for i, a, b in zip(network.node_ids, network.x, network.y):
            w.writerow([int(i), repr(float(a)), repr(float(b))])
    with open(edge_file, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "length", "edge_id"])
        for s, t, length, e in zip(network.sources, network.targets, network.lengths, network.edge_ids):
            w.writerow([int(s), int(t), repr(float(length)), int(e)])


def read_routes(path) -> BusRouteSet:
    fh, reader, _ = _open_csv(path, ["route_id", "seq", "node_id"])
    rows = []
    with fh:
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise NetworkFormatError(f"{path} row {row_no}: expected 3 fields, got {len(row)}")
            rows.append((row[0], _parse(row[1], int, path, row_no, "seq"),
                         _parse(row[2], int, path, row_no, "node_id")))
    rows.sort(key=lambda r: (r[0], r[1]))
    routes: dict[str, list[int]] = {}
    for route_id, _, node in rows:
        routes.setdefault(route_id, []).append(node)
    return BusRouteSet(list(routes.items()))


def write_routes(routes: BusRouteSet, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["route_id", "seq", "node_id"])
        for route_id, seq in routes.routes:
            for k, node in enumerate(seq):
                w.writerow([route_id, k, int(node)])


def read_zones(path) -> list[ZonePolygon]:
    """Zones from the block text format, or from a GeoJSON-style file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".json", ".geojson"):
        return _zones_from_json(json.loads(text))
    zones = []
    for block in text.replace("\r\n", "\n").split("\n\n"):
        lines = [ln.strip() for ln in block.strip().splitlines() if ln.strip()]
        if not lines:
            continue
        ring = []
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 2:
                raise NetworkFormatError(f"{path}: zone {lines[0]!r} bad vertex line {ln!r}")
            ring.append((float(parts[0]), float(parts[1])))
        zones.append(ZonePolygon(lines[0], ring))
    return zones


def _zones_from_json(doc) -> list[ZonePolygon]:
    features = doc["features"] if doc.get("type") == "FeatureCollection" else [doc]
    zones = []
    for k, feat in enumerate(features):
        geom = feat.get("geometry", feat)
        if geom.get("type") != "Polygon":
            raise NetworkFormatError(f"zone feature {k}: only Polygon geometries are supported")
        name = feat.get("properties", {}).get("name", f"zone{k}")
        zones.append(ZonePolygon(name, [tuple(p) for p in geom["coordinates"][0]]))
    return zones


def write_zones(zones: list[ZonePolygon], path) -> None:
    blocks = []
    for z in zones:
        blocks.append("\n".join([z.name] + [f"{a!r} {b!r}" for a, b in z.ring]))
    Path(path).write_text("\n\n".join(blocks) + "\n", encoding="utf-8")
