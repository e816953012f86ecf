"""Batch pipeline: ingest, centralities, KDE, CSR tests, zone statistics, attacks."""

from __future__ import annotations

import csv
import hashlib
import logging
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .centrality import CentralityTable, all_centralities, write_wide
from .config import RunConfig
from .network import (BusRouteSet, RoadNetwork, extract_zone, ingest_network, read_routes,
                      read_zones)
from .robustness import AttackStrategy, attack, fraction_grid, write_curves, write_suite_manifest
from .spatial import StudyWindow, csr_test, default_r_grid, hotspot_cells, kde_raster
from .stats import (summary_table, tau_matrix, write_tau_matrix, write_zone_comparison,
                    zone_comparison)

log = logging.getLogger(__name__)

MANIFEST = "manifest.ini"
NETWORK_LABEL = "all"


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class Context:
    config: RunConfig
    out: Path
    network: RoadNetwork | None = None
    routes: BusRouteSet | None = None
    zones: list = field(default_factory=list)
    tables: list[CentralityTable] | None = None
    outputs: list[str] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    notes: dict[str, str] = field(default_factory=dict)

    @property
    def threads(self) -> int | None:
        return self.config.run.threads or None

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out / name

    def table(self, name: str) -> CentralityTable:
        for t in self.tables:
            if t.index_name == name:
                return t
        raise KeyError(name)


def load_inputs(ctx: Context) -> None:
    inp = ctx.config.input
    ctx.network = ingest_network(inp.nodes, inp.edges, name=NETWORK_LABEL)
    if inp.routes:
        ctx.routes = read_routes(inp.routes)
        ctx.routes.validate(ctx.network)
    if inp.zones:
        ctx.zones = read_zones(inp.zones)
    summary = ctx.network.summary()
    log.info("network %(name)s: %(nodes)d nodes, %(edges)d edges, %(weak_components)d weak / "
             "%(strong_components)d strong components", summary)


def ensure_tables(ctx: Context) -> list[CentralityTable]:
    if ctx.tables is None:
        ctx.tables = all_centralities(ctx.network, ctx.routes,
                                      ctx.config.centrality.closeness_direction, threads=ctx.threads)
    return ctx.tables


def stage_centrality(ctx: Context) -> None:
    write_wide(ensure_tables(ctx), ctx.path("centrality.csv"))


def stage_kde(ctx: Context) -> None:
    cfg = ctx.config.kde
    tables = ensure_tables(ctx)
    names = {t.index_name for t in tables}
    pts = ctx.network.coordinates()
    window = StudyWindow.bounding_box(pts)
    rows = []
    for name in cfg.weight_indices:
        if name not in names:
            raise ValueError(f"unknown weight index {name!r}")
        raster = kde_raster(pts, ctx.table(name).values, window, cfg.bandwidth_m, cfg.cell_m, name)
        raster.write_ascii(ctx.path(f"kde_{name}.asc"))
        raster.write_csv(ctx.path(f"kde_{name}.csv"))
        try:
            hot = hotspot_cells(raster, cfg.hotspot_percentile)
        except ValueError:
            rows.append([name, "", 0])
            continue
        rows.append([name, repr(hot.threshold), len(hot.cells)])
    with open(ctx.path("hotspots.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "threshold", "n_cells"])
        w.writerows(rows)


def stage_csr(ctx: Context) -> None:
    cfg = ctx.config.csr
    pts = ctx.network.coordinates()
    window = StudyWindow.bounding_box(pts)
    r = default_r_grid(len(pts), window, cfg.r_steps, cfg.r_max_m)
    lines = []
    for kind in cfg.kind:
        res = csr_test(pts, window, kind, cfg.n_sims, ctx.config.csr_seed, r, cfg.m_reference, cfg.threshold)
        res.write_csv(ctx.path(f"envelope_{res.function_kind}.csv"))
        lines.append(f"{res.function_kind}.verdict = {res.verdict}")
        lines.append(f"{res.function_kind}.inside_fraction = {res.inside_fraction!r}")
        ctx.notes[f"csr.{res.function_kind}"] = res.verdict
        log.info("CSR %s test: %s (%.3f of radii inside envelope)", res.function_kind, res.verdict,
                 res.inside_fraction)
    lines += [f"intensity = {len(pts) / window.area!r}", f"n_sims = {cfg.n_sims}",
              f"seed = {ctx.config.csr_seed}"]
    ctx.path("csr_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def stage_stats(ctx: Context) -> None:
    tables = ensure_tables(ctx)
    zone_tables = {ctx.network.name: tables}
    counts = {ctx.network.name: (ctx.network.n_nodes, ctx.network.n_edges)}
    for poly in ctx.zones:
        sub = extract_zone(ctx.network, poly)
        if sub.n_nodes < 3:
            raise ValueError(f"zone {poly.name!r} holds {sub.n_nodes} nodes; need at least 3")
        log.info("zone %s: %d nodes, %d edges", poly.name, sub.n_nodes, sub.n_edges)
        sub_tables = all_centralities(sub, None, ctx.config.centrality.closeness_direction,
                                      threads=ctx.threads)
        # bus visits are counted on whole routes, then restricted to the zone
        full_bus = ctx.table("bus")
        keep = np.isin(full_bus.node_ids, sub.node_ids)
        sub_tables[-1] = CentralityTable("bus", sub.node_ids, full_bus.values[keep], False, sub.n_nodes)
        zone_tables[poly.name] = sub_tables
        counts[poly.name] = (sub.n_nodes, sub.n_edges)
    ordered = {k: zone_tables[k] for k in [p.name for p in ctx.zones] + [ctx.network.name]}
    summary_table(ordered, counts).write_csv(ctx.path("summary_table.csv"))
    write_tau_matrix(tables, tau_matrix(tables), ctx.path("kendall_tau.csv"))
    pairs = ctx.config.compare_pairs
    if pairs:
        for a, b in pairs:
            for z in (a, b):
                if z not in zone_tables:
                    raise ValueError(f"unknown zone {z!r} in comparison")
        results = zone_comparison(zone_tables, pairs)
        write_zone_comparison(results, pairs, ctx.path("mann_whitney.csv"))
        for name, by_pair in results.items():
            for label, res in by_pair.items():
                if res is not None:
                    ctx.notes[f"mann_whitney.{name}.{label}"] = f"{res.p_value:.3E}"


def read_node_list(path) -> list[int]:
    """One node id per line; blank lines and ``#`` comments skipped."""
    ids = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line and line != "node_id":
                ids.append(int(line))
    return ids


def stage_attack(ctx: Context) -> None:
    cfg = ctx.config.attack
    tables = ensure_tables(ctx)
    names = {t.index_name for t in tables}
    grid = fraction_grid(cfg.grid_step)
    node_lists = ctx.config.node_lists
    curves = []
    for strat in cfg.strategies:
        if strat == "random":
            s = AttackStrategy.random(cfg.replicates, ctx.config.attack_seed)
        elif strat in names:
            s = AttackStrategy.by_index(ctx.table(strat))
        elif strat in node_lists:
            s = AttackStrategy.nodes(read_node_list(node_lists[strat]), label=strat)
        else:
            raise ValueError(f"unknown attack strategy {strat!r}")
        log.info("attack %s", s.name)
        curves.append(attack(ctx.network, s, grid, cfg.component_notion))
    write_curves(curves, ctx.path("attack_curves.csv"))
    write_suite_manifest(ctx.network, curves, ctx.path("attack_manifest.txt"))
    for c in curves:
        ctx.notes[f"attack.{c.strategy}.auc"] = f"{c.auc():.6f}"
        ctx.notes[f"attack.{c.strategy}.lcc_at_10pct"] = f"{c.at(0.1):.6f}"


STAGE_FUNCS = {"centrality": stage_centrality, "kde": stage_kde, "csr": stage_csr,
               "stats": stage_stats, "attack": stage_attack}


def run(config: RunConfig, stages=None) -> Context:
    """Execute ``stages`` (default: those configured) and write the manifest.

    Raises ``ConfigError`` on validation problems and ``StageError`` when a
    stage fails.
    """
    stages = list(config.run.stages if stages is None else stages)
    config.validate(stages)
    out = Path(config.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(config, out)
    t_start = time.perf_counter()
    t0 = time.perf_counter()
    try:
        load_inputs(ctx)
    except (ValueError, KeyError) as exc:
        from .config import ConfigError
        raise ConfigError(f"[ingest] {exc}") from exc
    ctx.timings["ingest"] = time.perf_counter() - t0
    for stage in [s for s in STAGE_FUNCS if s in stages]:
        log.info("stage %s started", stage)
        t0 = time.perf_counter()
        try:
            STAGE_FUNCS[stage](ctx)
        except Exception as exc:  # noqa: BLE001
            raise StageError(stage, str(exc)) from exc
        ctx.timings[stage] = time.perf_counter() - t0
        log.info("stage %s finished in %.2f s", stage, ctx.timings[stage])
    ctx.timings["total"] = time.perf_counter() - t_start
    write_manifest(ctx, stages)
    return ctx


def write_manifest(ctx: Context, stages) -> None:
    """INI manifest: the full config echo plus hashes, versions and timings.

    Passing the manifest back as ``--config`` replays the run.
    """
    cp = ctx.config.to_parser()
    cp.set("run", "stages", ", ".join(stages))
    import numba
    import scipy

    cp.add_section("manifest")
    meta = {"roadrobust": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__, "numba": numba.__version__,
            "network_sha256": ctx.network.fingerprint(), "nodes": str(ctx.network.n_nodes),
            "edges": str(ctx.network.n_edges), "csr_seed": str(ctx.config.csr_seed),
            "attack_seed": str(ctx.config.attack_seed)}
    for k, v in meta.items():
        cp.set("manifest", k, v)
    cp.add_section("inputs")
    for key in ("nodes", "edges", "routes", "zones"):
        path = getattr(ctx.config.input, key)
        if path:
            cp.set("inputs", key, sha256_file(path))
    cp.add_section("outputs")
    for name in ctx.outputs:
        cp.set("outputs", name, sha256_file(ctx.out / name))
    cp.add_section("timings")
    for k, v in ctx.timings.items():
        cp.set("timings", k, f"{v:.3f}")
    cp.add_section("results")
    for k, v in ctx.notes.items():
        cp.set("results", k, v)
    with open(ctx.out / MANIFEST, "w", encoding="utf-8") as fh:
        cp.write(fh)
