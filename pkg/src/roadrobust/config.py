"""Run configuration: INI file with per-stage sections.

Example::

    [input]
    nodes = nodes.csv
    edges = edges.csv
    routes = routes.csv        ; optional
    zones = zones.txt          ; optional

    [run]
    output_dir = out
    seed = 0
    stages = centrality, kde, csr, stats, attack

    [kde]
    bandwidth_m = 1000
    cell_m = 100
    weight_indices = betweenness, closeness, load

Relative paths resolve against the config file's directory. Stage seeds
left blank derive from the root seed (see ``stage_seed``).
"""

from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .spatial import DEFAULT_R_STEPS

STAGES = ("centrality", "kde", "csr", "stats", "attack")
STAGE_CODES = {"csr": 1, "attack": 2}


class ConfigError(ValueError):
    """Invalid configuration; maps to exit status 2."""


def stage_seed(root: int, stage: str) -> int:
    """Seed for one stochastic stage, derived from the root seed."""
    return int(np.random.SeedSequence([root, STAGE_CODES[stage]]).generate_state(1)[0])


def _list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


@dataclass
class InputConfig:
    nodes: str = ""
    edges: str = ""
    routes: str = ""
    zones: str = ""


@dataclass
class RunSection:
    output_dir: str = "out"
    seed: int = 0
    threads: int = 0
    stages: list[str] = field(default_factory=lambda: list(STAGES))


@dataclass
class CentralityConfig:
    closeness_direction: str = "inward"


@dataclass
class KdeConfig:
    bandwidth_m: float = 1000.0
    cell_m: float = 100.0
    weight_indices: list[str] = field(default_factory=lambda: ["betweenness", "closeness", "load"])
    hotspot_percentile: float = 95.0


@dataclass
class CsrConfig:
    kind: list[str] = field(default_factory=lambda: ["G", "F"])
    n_sims: int = 99
    seed: int | None = None
    r_max_m: float | None = None
    r_steps: int = DEFAULT_R_STEPS
    m_reference: int = 10_000
    threshold: float = 0.95


@dataclass
class AttackConfig:
    strategies: list[str] = field(default_factory=lambda: ["betweenness", "load", "bus", "degree",
                                                           "closeness", "random"])
    replicates: int = 20
    seed: int | None = None
    grid_step: float = 0.01
    component_notion: str = "weak"
    node_lists: list[str] = field(default_factory=list)  # "label:path" items


@dataclass
class StatsConfig:
    compare: list[str] = field(default_factory=list)  # "zoneA:zoneB" items


SECTIONS = {"input": InputConfig, "run": RunSection, "centrality": CentralityConfig,
            "kde": KdeConfig, "csr": CsrConfig, "attack": AttackConfig, "stats": StatsConfig}


@dataclass
class RunConfig:
    input: InputConfig = field(default_factory=InputConfig)
    run: RunSection = field(default_factory=RunSection)
    centrality: CentralityConfig = field(default_factory=CentralityConfig)
    kde: KdeConfig = field(default_factory=KdeConfig)
    csr: CsrConfig = field(default_factory=CsrConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    stats: StatsConfig = field(default_factory=StatsConfig)

    @property
    def csr_seed(self) -> int:
        return self.csr.seed if self.csr.seed is not None else stage_seed(self.run.seed, "csr")

    @property
    def attack_seed(self) -> int:
        return self.attack.seed if self.attack.seed is not None else stage_seed(self.run.seed, "attack")

    @property
    def compare_pairs(self) -> list[tuple[str, str]]:
        pairs = []
        for item in self.stats.compare:
            a, sep, b = item.partition(":")
            if not sep or not a or not b:
                raise ConfigError(f"stats.compare item {item!r} must look like zoneA:zoneB")
            pairs.append((a, b))
        return pairs

    @property
    def node_lists(self) -> dict[str, str]:
        out = {}
        for item in self.attack.node_lists:
            label, sep, path = item.partition(":")
            if not sep or not label or not path:
                raise ConfigError(f"attack.node_lists item {item!r} must look like label:path")
            out[label] = path
        return out

    def validate(self, stages=None) -> None:
        inp = self.input
        if not inp.nodes or not inp.edges:
            raise ConfigError("input.nodes and input.edges are required")
        for key in ("nodes", "edges", "routes", "zones"):
            path = getattr(inp, key)
            if path and not Path(path).is_file():
                raise ConfigError(f"input.{key}: file not found: {path}")
        stages = self.run.stages if stages is None else stages
        for s in stages:
            if s not in STAGES:
                raise ConfigError(f"unknown stage {s!r}; choose from {', '.join(STAGES)}")
        if self.centrality.closeness_direction not in ("inward", "outward"):
            raise ConfigError("centrality.closeness_direction must be inward or outward")
        for name, value in (("kde.bandwidth_m", self.kde.bandwidth_m), ("kde.cell_m", self.kde.cell_m),
                            ("csr.r_steps", self.csr.r_steps), ("csr.m_reference", self.csr.m_reference),
                            ("attack.replicates", self.attack.replicates),
                            ("attack.grid_step", self.attack.grid_step)):
            if not value > 0:
                raise ConfigError(f"{name} must be positive")
        if self.csr.r_max_m is not None and not self.csr.r_max_m > 0:
            raise ConfigError("csr.r_max_m must be positive")
        if self.csr.n_sims < 19:
            raise ConfigError("csr.n_sims must be at least 19")
        if self.csr.m_reference < 100:
            raise ConfigError("csr.m_reference must be at least 100")
        for k in self.csr.kind:
            if k.upper() not in ("G", "F"):
                raise ConfigError(f"csr.kind {k!r} must be G or F")
        if not 0 < self.kde.hotspot_percentile < 100:
            raise ConfigError("kde.hotspot_percentile must lie in (0, 100)")
        if self.attack.component_notion not in ("weak", "strong"):
            raise ConfigError("attack.component_notion must be weak or strong")
        if self.attack.grid_step > 1:
            raise ConfigError("attack.grid_step must not exceed 1")
        for label, path in self.node_lists.items():
            if not Path(path).is_file():
                raise ConfigError(f"attack.node_lists {label}: file not found: {path}")
        pairs = self.compare_pairs
        if pairs and not inp.zones and "stats" in stages:
            raise ConfigError("stats.compare needs input.zones")

    # ------------------------------------------------------------ INI round trip

    def to_parser(self) -> configparser.ConfigParser:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        for section in SECTIONS:
            cp.add_section(section)
            for key, value in asdict(getattr(self, section)).items():
                if value is None:
                    text = ""
                elif isinstance(value, list):
                    text = ", ".join(str(v) for v in value)
                elif isinstance(value, float):
                    text = repr(value)
                else:
                    text = str(value)
                cp.set(section, key, text)
        return cp


def _coerce(cls, key: str, raw: str, section: str):
    ftype = {f.name: f.type for f in fields(cls)}[key]
    raw = raw.strip()
    try:
        if "list" in ftype:
            return _list(raw)
        if raw == "" and "None" in ftype:
            return None
        if ftype.startswith("int"):
            return int(raw)
        if ftype.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None
    return raw


def load_config(path) -> RunConfig:
    """Parse an INI config; unknown sections (e.g. a manifest's) are ignored."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    cfg = RunConfig()
    for section, cls in SECTIONS.items():
        if not cp.has_section(section):
            continue
        target = getattr(cfg, section)
        known = {f.name for f in fields(cls)}
        for key, raw in cp.items(section):
            if key not in known:
                raise ConfigError(f"unknown key {section}.{key}")
            setattr(target, key, _coerce(cls, key, raw, section))
    base = path.parent
    for key in ("nodes", "edges", "routes", "zones"):
        value = getattr(cfg.input, key)
        if value and not Path(value).is_absolute():
            setattr(cfg.input, key, str((base / value).resolve()))
    resolved = []
    for label, p in cfg.node_lists.items():
        resolved.append(f"{label}:{p if Path(p).is_absolute() else (base / p).resolve()}")
    cfg.attack.node_lists = resolved
    if cfg.run.output_dir and not Path(cfg.run.output_dir).is_absolute():
        cfg.run.output_dir = str((base / cfg.run.output_dir).resolve())
    return cfg
