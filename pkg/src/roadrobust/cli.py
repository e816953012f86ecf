"""Command-line entry point: ``roadrobust <subcommand>``.

Exit status: 0 success, 1 runtime failure, 2 invalid configuration or input.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import STAGES, ConfigError, RunConfig, load_config
from .network import NetworkFormatError, ingest_network, read_routes, read_zones, write_network, write_routes, write_zones
from .paths import THREADS_ENV
from .pipeline import MANIFEST, StageError, run
from .synthetic import elongated_network, split_zones, synthetic_routes

log = logging.getLogger("roadrobust")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI run config (a previous manifest.ini also works)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--seed", type=int, help="root seed for all stochastic stages")
    p.add_argument("--threads", type=int, help=f"thread cap (default: ${THREADS_ENV} or CPU count)")
    p.add_argument("--nodes", help="nodes CSV (id,x,y)")
    p.add_argument("--edges", help="edges CSV (source,target,length[,edge_id])")
    p.add_argument("--routes", help="bus routes CSV (route_id,seq,node_id)")
    p.add_argument("--zones", help="zone polygons (text blocks or GeoJSON)")
    p.add_argument("-v", "--verbose", action="store_true")


def _kde_flags(p):
    p.add_argument("--bandwidth-m", type=float)
    p.add_argument("--cell-m", type=float)
    p.add_argument("--index", action="append", dest="weight_indices",
                   help="centrality index used as point weight (repeatable)")


def _csr_flags(p):
    p.add_argument("--kind", action="append", choices=["G", "F"], help="repeatable")
    p.add_argument("--n-sims", type=int)


def _attack_flags(p):
    p.add_argument("--strategy", action="append", dest="strategies", help="index name or 'random' (repeatable)")
    p.add_argument("--replicates", type=int)
    p.add_argument("--grid-step", type=float)
    p.add_argument("--component", choices=["weak", "strong"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roadrobust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured pipeline")
    _common(p)
    _kde_flags(p)
    _csr_flags(p)
    _attack_flags(p)
    p.add_argument("--stage", action="append", dest="stages", choices=STAGES)

    p = sub.add_parser("ingest-check", help="validate input files and print a summary")
    _common(p)

    p = sub.add_parser("centrality", help="write the wide centrality CSV")
    _common(p)

    p = sub.add_parser("kde", help="kernel density rasters weighted by centrality")
    _common(p)
    _kde_flags(p)

    p = sub.add_parser("csr", help="G/F envelope tests against complete spatial randomness")
    _common(p)
    _csr_flags(p)

    p = sub.add_parser("attack", help="node-removal attack curves")
    _common(p)
    _attack_flags(p)

    p = sub.add_parser("stats", help="summary table, Kendall tau matrix, Mann-Whitney zone tests")
    _common(p)
    p.add_argument("--compare", nargs=2, action="append", metavar=("ZONE_A", "ZONE_B"))

    p = sub.add_parser("demo", help="generate a synthetic elongated network and run everything")
    _common(p)
    p.add_argument("--cols", type=int, default=50)
    p.add_argument("--rows", type=int, default=10)
    p.add_argument("--corridors", type=int, default=2)
    return parser


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for key in ("nodes", "edges", "routes", "zones"):
        value = getattr(args, key, None)
        if value:
            setattr(cfg.input, key, str(Path(value).resolve()))
    if args.output:
        cfg.run.output_dir = str(Path(args.output).resolve())
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg.run.threads = args.threads
    overrides = {
        "bandwidth_m": (cfg.kde, "bandwidth_m"), "cell_m": (cfg.kde, "cell_m"),
        "weight_indices": (cfg.kde, "weight_indices"), "kind": (cfg.csr, "kind"),
        "n_sims": (cfg.csr, "n_sims"), "strategies": (cfg.attack, "strategies"),
        "replicates": (cfg.attack, "replicates"), "grid_step": (cfg.attack, "grid_step"),
        "component": (cfg.attack, "component_notion"),
    }
    for flag, (section, key) in overrides.items():
        value = getattr(args, flag, None)
        if value is not None:
            setattr(section, key, value)
    if getattr(args, "compare", None):
        cfg.stats.compare = [f"{a}:{b}" for a, b in args.compare]
    return cfg


def ingest_check(cfg: RunConfig) -> int:
    if not cfg.input.nodes or not cfg.input.edges:
        raise ConfigError("--nodes and --edges (or a config) are required")
    net = ingest_network(cfg.input.nodes, cfg.input.edges)
    for key, value in net.summary().items():
        print(f"{key} = {value}")
    if cfg.input.routes:
        routes = read_routes(cfg.input.routes)
        routes.validate(net)
        print(f"routes = {len(routes.routes)}")
    if cfg.input.zones:
        for z in read_zones(cfg.input.zones):
            print(f"zone.{z.name}.area_m2 = {z.area!r}")
    return 0


def make_demo_inputs(out: Path, cols: int, rows: int, corridors: int, seed: int) -> Path:
    """Write a synthetic network, routes, zones and a config; return the config path."""
    inp = out / "input"
    inp.mkdir(parents=True, exist_ok=True)
    net = elongated_network(cols, rows, corridors, seed=seed, name="city")
    write_network(net, inp / "nodes.csv", inp / "edges.csv")
    write_routes(synthetic_routes(net, cols, rows, corridors, seed=seed), inp / "routes.csv")
    zones = split_zones(net)
    write_zones(zones, inp / "zones.txt")
    cfg = RunConfig()
    cfg.input.nodes = "input/nodes.csv"
    cfg.input.edges = "input/edges.csv"
    cfg.input.routes = "input/routes.csv"
    cfg.input.zones = "input/zones.txt"
    cfg.run.output_dir = "results"
    cfg.run.seed = seed
    cfg.stats.compare = [f"{zones[0].name}:{zones[1].name}"]
    path = out / "demo.ini"
    with open(path, "w", encoding="utf-8") as fh:
        cfg.to_parser().write(fh)
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "demo":
            out = Path(args.output or "demo_out").resolve()
            seed = args.seed if args.seed is not None else 0
            args.config = str(make_demo_inputs(out, args.cols, args.rows, args.corridors, seed))
            args.output = str(out / "results")
        cfg = config_from_args(args)
        if args.command == "ingest-check":
            return ingest_check(cfg)
        if args.command in ("run", "demo"):
            stages = getattr(args, "stages", None) or cfg.run.stages
        else:
            stages = [args.command]
        ctx = run(cfg, stages)
    except (ConfigError, NetworkFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for key, value in ctx.notes.items():
        print(f"{key} = {value}")
    print(f"manifest = {ctx.out / MANIFEST}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
