"""Synthetic spatial road networks used in place of real city extracts."""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.sparse import coo_matrix, csr_matrix
from scipy.sparse.csgraph import dijkstra, minimum_spanning_tree

from .network import BusRouteSet, RoadNetwork, ZonePolygon
from .paths import ShortestPathView

log = logging.getLogger(__name__)


def _bidirectional(pairs: np.ndarray, x: np.ndarray, y: np.ndarray, factor=None):
    a, b = pairs[:, 0], pairs[:, 1]
    length = np.hypot(x[a] - x[b], y[a] - y[b])
    if factor is not None:
        length = length * factor
    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    return src, dst, np.concatenate([length, length])


def _lattice_pairs(cols: int, rows: int) -> np.ndarray:
    ids = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    vert = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    return np.vstack([horiz, vert])


def grid_network(cols: int, rows: int, spacing: float = 100.0, name: str = "grid") -> RoadNetwork:
    """Regular lattice of two-way streets."""
    if cols < 2 or rows < 2:
        raise ValueError("grid dimensions must be at least 2")
    ids = np.arange(rows * cols)
    x = (ids % cols) * spacing
    y = (ids // cols) * spacing
    src, dst, length = _bidirectional(_lattice_pairs(cols, rows), x.astype(float), y.astype(float))
    return RoadNetwork(ids, x, y, src, dst, length, None, name=name)


def corridor_rows(rows: int, n_corridors: int) -> list[int]:
    return sorted({int(round((k + 1) * (rows - 1) / (n_corridors + 1))) for k in range(n_corridors)})


def elongated_network(cols: int = 50, rows: int = 10, n_corridors: int = 2, spacing: float = 100.0,
                      corridor_factor: float = 0.5, block: int = 5, street_keep: float = 0.5,
                      jitter: float = 0.15, seed: int = 0, name: str = "elongated") -> RoadNetwork:
    """Long, narrow street network with a few fast axial corridors.

    Columns are grouped into neighbourhoods ``block`` wide. Local streets never
    cross a neighbourhood boundary, so neighbourhoods reach each other only
    through the corridor rows. Inside the allowed links, a random spanning
    tree is always kept plus a random share ``street_keep`` of the rest.
    Corridor lengths are scaled by ``corridor_factor`` so that through traffic
    prefers them.
    """
    if cols < 2 or rows < 2:
        raise ValueError("grid dimensions must be at least 2")
    if cols < 4 * rows:
        raise ValueError("elongated grid needs cols >= 4 * rows")
    if not 0 < corridor_factor <= 1:
        raise ValueError("corridor_factor must lie in (0, 1]")
    if n_corridors < 1 or block < 1:
        raise ValueError("need at least one corridor and block >= 1")
    rng = np.random.default_rng(seed)
    n = rows * cols
    ids = np.arange(n)
    x = (ids % cols) * spacing + rng.uniform(-jitter, jitter, n) * spacing
    y = (ids // cols) * spacing + rng.uniform(-jitter, jitter, n) * spacing
    pairs = _lattice_pairs(cols, rows)
    row_of, col_of = ids // cols, ids % cols
    a, b = pairs[:, 0], pairs[:, 1]
    horizontal = row_of[a] == row_of[b]
    on_corridor = horizontal & np.isin(row_of[a], corridor_rows(rows, n_corridors))
    crosses_block = horizontal & (col_of[b] % block == 0)
    allowed = on_corridor | ~crosses_block
    pairs, on_corridor = pairs[allowed], on_corridor[allowed]
    tree = minimum_spanning_tree(coo_matrix((rng.random(len(pairs)) + 1e-3, (pairs[:, 0], pairs[:, 1])),
                                            shape=(n, n))).tocoo()
    in_tree = set(zip(np.minimum(tree.row, tree.col).tolist(), np.maximum(tree.row, tree.col).tolist()))
    tree_mask = np.array([(int(u), int(v)) in in_tree for u, v in pairs])
    keep = on_corridor | tree_mask | (rng.random(len(pairs)) < street_keep)
    pairs, on_corridor = pairs[keep], on_corridor[keep]
    factor = np.where(on_corridor, corridor_factor, 1.0)
    src, dst, length = _bidirectional(pairs, x, y, factor)
    return RoadNetwork(ids, x, y, src, dst, length, None, name=name)


def corridor_nodes(cols: int, rows: int, n_corridors: int) -> np.ndarray:
    return np.concatenate([np.arange(r * cols, (r + 1) * cols) for r in corridor_rows(rows, n_corridors)])


def random_geometric_network(n: int, radius: float, size: float = 1000.0, seed: int = 0,
                             name: str = "rgg") -> RoadNetwork:
    """Uniform points in a square; two-way links between points within ``radius``."""
    if n < 2 or radius <= 0:
        raise ValueError("need n >= 2 and radius > 0")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2)) * size
    i, j = np.triu_indices(n, k=1)
    d = np.hypot(*(pts[i] - pts[j]).T)
    close = d <= radius
    pairs = np.column_stack([i[close], j[close]])
    src, dst, length = _bidirectional(pairs, pts[:, 0], pts[:, 1])
    net = RoadNetwork(np.arange(n), pts[:, 0], pts[:, 1], src, dst, length, None, name=name)
    weak, _ = net.component_counts()
    if weak > 1:
        log.warning("random geometric network is disconnected (%d components)", weak)
    return net


def synthetic_network(kind: str, seed: int = 0, **params) -> RoadNetwork:
    if kind == "grid":
        return grid_network(**params)
    if kind in ("elongated", "elongated-grid"):
        return elongated_network(seed=seed, **params)
    if kind == "random-geometric":
        return random_geometric_network(seed=seed, **params)
    raise ValueError(f"unknown synthetic network kind {kind!r}")


def synthetic_routes(network: RoadNetwork, cols: int, rows: int, n_corridors: int,
                     n_random: int = 10, seed: int = 0) -> BusRouteSet:
    """Bus lines along each corridor (both directions) plus shortest-path lines between random stops."""
    routes = []
    for k, r in enumerate(corridor_rows(rows, n_corridors)):
        line = list(range(r * cols, (r + 1) * cols))
        routes.append((f"corridor{k}e", line))
        routes.append((f"corridor{k}w", line[::-1]))
    rng = np.random.default_rng([seed, 1])
    n = network.n_nodes
    view = ShortestPathView.from_network(network)
    adj = csr_matrix((view.fwd_w, view.fwd_idx, view.fwd_ptr), shape=(n, n))
    for k in range(n_random):
        a, b = (int(v) for v in rng.choice(n, size=2, replace=False))
        dist, pred = dijkstra(adj, indices=a, return_predecessors=True)
        if not math.isfinite(dist[b]):
            continue
        path = [b]
        while path[-1] != a:
            path.append(int(pred[path[-1]]))
        routes.append((f"line{k}", [int(network.node_ids[p]) for p in path[::-1]]))
    return BusRouteSet(routes)


def split_zones(network: RoadNetwork, names=("west", "east")) -> list[ZonePolygon]:
    """Cut the bounding box into equal-width vertical strips."""
    x0, x1 = float(network.x.min()) - 1.0, float(network.x.max()) + 1.0
    y0, y1 = float(network.y.min()) - 1.0, float(network.y.max()) + 1.0
    edges = np.linspace(x0, x1, len(names) + 1)
    return [ZonePolygon(nm, [(edges[k], y0), (edges[k + 1], y0), (edges[k + 1], y1), (edges[k], y1)])
            for k, nm in enumerate(names)]
