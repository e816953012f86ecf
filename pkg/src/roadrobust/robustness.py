"""Divisive node-removal attacks tracking the largest connected component."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .centrality import CentralityTable
from .network import RoadNetwork

log = logging.getLogger(__name__)

DEFAULT_REPLICATES = 20
DEFAULT_STEP = 0.01


@dataclass(frozen=True)
class AttackStrategy:
    """How nodes are ordered for removal.

    ``kind`` is ``centrality`` (needs ``table``, computed once on the intact
    network), ``random`` (``replicates`` permutations from ``seed``) or
    ``nodes`` (explicit ``node_list``).
    """

    kind: str
    table: CentralityTable | None = None
    node_list: tuple[int, ...] = ()
    replicates: int = DEFAULT_REPLICATES
    seed: int = 0
    label: str = ""

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "centrality":
            return self.table.index_name
        return self.kind

    @classmethod
    def by_index(cls, table: CentralityTable) -> "AttackStrategy":
        return cls("centrality", table=table)

    @classmethod
    def random(cls, replicates: int = DEFAULT_REPLICATES, seed: int = 0) -> "AttackStrategy":
        return cls("random", replicates=replicates, seed=seed)

    @classmethod
    def nodes(cls, node_ids, label: str = "nodes") -> "AttackStrategy":
        return cls("nodes", node_list=tuple(int(v) for v in node_ids), label=label)


@dataclass
class AttackCurve:
    strategy: str
    fractions_removed: np.ndarray
    lcc_fraction: np.ndarray
    component_notion: str
    lcc_min: np.ndarray | None = None
    lcc_max: np.ndarray | None = None
    replicates: int = 1
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def auc(self) -> float:
        """Trapezoidal area under the LCC curve."""
        f, y = self.fractions_removed, self.lcc_fraction
        return float(np.sum(np.diff(f) * (y[1:] + y[:-1]) / 2.0))

    def at(self, fraction: float) -> float:
        k = int(np.argmin(np.abs(self.fractions_removed - fraction)))
        return float(self.lcc_fraction[k])


def fraction_grid(step: float = DEFAULT_STEP) -> np.ndarray:
    k = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, k + 1)


def removal_order(network: RoadNetwork, strategy: AttackStrategy,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Node positions in removal order.

    Centrality order is descending value with ascending node id breaking
    ties; it is derived only from the supplied table.
    """
    n = network.n_nodes
    if strategy.kind == "centrality":
        table = strategy.table
        if table is None:
            raise ValueError("centrality strategy needs a table")
        lookup = dict(zip(table.node_ids.tolist(), table.values.tolist()))
        missing = [int(v) for v in network.node_ids if int(v) not in lookup]
        if missing:
            raise ValueError(f"{table.index_name} table lacks node {missing[0]}")
        values = np.array([lookup[int(v)] for v in network.node_ids])
        return np.lexsort((network.node_ids, -values))
    if strategy.kind == "random":
        return rng.permutation(n)
    if strategy.kind == "nodes":
        try:
            pos = network.index_of(list(strategy.node_list))
        except KeyError as exc:
            raise ValueError(f"node-list strategy: {exc.args[0]}") from None
        if len(np.unique(pos)) != len(pos):
            raise ValueError("node-list strategy repeats a node")
        # listed nodes go first; the rest are never removed unless the grid asks
        rest = np.setdiff1d(np.arange(n), pos)
        return np.concatenate([pos, rest])
    raise ValueError(f"unknown strategy kind {strategy.kind!r}")


def _removed_counts(n: int, grid: np.ndarray) -> np.ndarray:
    return np.floor(grid * n + 0.5).astype(np.int64)


def _weak_lcc_profile(n: int, s: np.ndarray, t: np.ndarray, order: np.ndarray) -> np.ndarray:
    """Largest weak component after removing the first k nodes, for k = 0..n.

    Nodes are added back in reverse removal order with union-find.
    """
    adj = [[] for _ in range(n)]
    for a, b in zip(s.tolist(), t.tolist()):
        adj[a].append(b)
        adj[b].append(a)
    parent = list(range(n))
    size = [1] * n
    present = [False] * n

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    best = 0
    profile = np.zeros(n + 1, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        v = int(order[k])
        present[v] = True
        best = max(best, 1)
        for u in adj[v]:
            if not present[u]:
                continue
            ru, rv = find(u), find(v)
            if ru == rv:
                continue
            if size[ru] < size[rv]:
                ru, rv = rv, ru
            parent[rv] = ru
            size[ru] += size[rv]
            best = max(best, size[ru])
        profile[k] = best
    return profile


def _strong_lcc_at(n: int, s: np.ndarray, t: np.ndarray, order: np.ndarray, ks: np.ndarray) -> np.ndarray:
    out = np.zeros(len(ks), dtype=np.int64)
    for j, k in enumerate(ks):
        alive = np.ones(n, dtype=bool)
        alive[order[:k]] = False
        if not alive.any():
            continue
        keep = alive[s] & alive[t]
        adj = coo_matrix((np.ones(int(keep.sum())), (s[keep], t[keep])), shape=(n, n)).tocsr()
        _, labels = connected_components(adj, directed=True, connection="strong")
        out[j] = np.bincount(labels[alive]).max()
    return out


def _lcc_sizes(network: RoadNetwork, order: np.ndarray, ks: np.ndarray, notion: str) -> np.ndarray:
    n = network.n_nodes
    s, t = network.edge_index_arrays()
    if notion == "weak":
        return _weak_lcc_profile(n, s, t, order)[ks]
    if notion == "strong":
        return _strong_lcc_at(n, s, t, order, ks)
    raise ValueError(f"component notion must be weak or strong, not {notion!r}")


def attack(network: RoadNetwork, strategy: AttackStrategy, sample_grid=None,
           component_notion: str = "weak") -> AttackCurve:
    """Remove nodes in strategy order and record |LCC| / |V| at each sampled fraction."""
    n = network.n_nodes
    if n == 0:
        raise ValueError("cannot attack an empty network")
    grid = fraction_grid() if sample_grid is None else np.asarray(sample_grid, dtype=float)
    if np.any(np.diff(grid) <= 0) or grid.min() < 0 or grid.max() > 1:
        raise ValueError("sample_grid must be ascending within [0, 1]")
    ks = _removed_counts(n, grid)
    if network.component_counts()[0 if component_notion == "weak" else 1] > 1:
        log.warning("%s is not %sly connected; curve starts below 1", network.name, component_notion)
    if strategy.kind == "random":
        if strategy.replicates < 1:
            raise ValueError("random strategy needs at least one replicate")
        runs = np.empty((strategy.replicates, len(ks)))
        for r in range(strategy.replicates):
            order = removal_order(network, strategy, np.random.default_rng([strategy.seed, r]))
            runs[r] = _lcc_sizes(network, order, ks, component_notion) / n
        return AttackCurve(strategy.name, grid, runs.mean(axis=0), component_notion,
                           runs.min(axis=0), runs.max(axis=0), strategy.replicates, strategy.seed,
                           meta={"sd": runs.std(axis=0, ddof=1) if strategy.replicates > 1 else None})
    order = removal_order(network, strategy)
    if strategy.kind == "nodes" and ks.max() > len(strategy.node_list):
        log.info("%s: grid extends beyond the %d listed nodes; remaining nodes removed by id",
                 strategy.name, len(strategy.node_list))
    sizes = _lcc_sizes(network, order, ks, component_notion)
    return AttackCurve(strategy.name, grid, sizes / n, component_notion)


def attack_suite(network: RoadNetwork, indices: list[CentralityTable], replicates: int = DEFAULT_REPLICATES,
                 seed: int = 0, sample_grid=None, component_notion: str = "weak",
                 extra: list[AttackStrategy] = ()) -> list[AttackCurve]:
    """One curve per index plus a random baseline on a shared grid."""
    grid = fraction_grid() if sample_grid is None else np.asarray(sample_grid, dtype=float)
    for table in indices:
        if table.n != network.n_nodes or not np.array_equal(table.node_ids, network.node_ids):
            raise ValueError(f"{table.index_name} table was not computed on this network")
    strategies = [AttackStrategy.by_index(t) for t in indices] + list(extra)
    strategies.append(AttackStrategy.random(replicates, seed))
    curves = []
    for strat in strategies:
        log.info("attack %s on %s", strat.name, network.name)
        curves.append(attack(network, strat, grid, component_notion))
    return curves


def write_curves(curves: list[AttackCurve], path) -> None:
    with_spread = any(c.lcc_min is not None for c in curves)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "fraction_removed", "lcc_fraction"] + (["lcc_min", "lcc_max"] if with_spread else []))
        for c in curves:
            for k, f in enumerate(c.fractions_removed):
                row = [c.strategy, repr(float(f)), repr(float(c.lcc_fraction[k]))]
                if with_spread:
                    if c.lcc_min is None:
                        row += ["", ""]
                    else:
                        row += [repr(float(c.lcc_min[k])), repr(float(c.lcc_max[k]))]
                w.writerow(row)


def write_suite_manifest(network: RoadNetwork, curves: list[AttackCurve], path) -> None:
    lines = [f"network.name = {network.name}",
             f"network.nodes = {network.n_nodes}",
             f"network.edges = {network.n_edges}",
             f"network.sha256 = {network.fingerprint()}"]
    for k, c in enumerate(curves):
        lines.append(f"strategy.{k}.name = {c.strategy}")
        lines.append(f"strategy.{k}.component = {c.component_notion}")
        lines.append(f"strategy.{k}.replicates = {c.replicates}")
        if c.seed is not None:
            lines.append(f"strategy.{k}.seed = {c.seed}")
        lines.append(f"strategy.{k}.auc = {c.auc()!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
