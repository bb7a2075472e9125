"""Experiment configuration: schema, defaults, parsing, and echo.

Configs are nested YAML (JSON works too). Unknown keys are rejected, missing
keys take the documented defaults, and the fully resolved config is echoed
back into every output so a run can be reproduced from its artifacts alone.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import yaml

from . import topology
from .defense import DetectorMode, DetectorSpec, Mitigation, MitigationSpec
from .metrics import EnergyConstants
from .optical import FLOOR_BER, AttackSpec
from .topology import ConfigurationError, FabricKind
from .traffic import Pattern, TrafficSpec

__all__ = [
    "NetworkConfig",
    "SweepSpec",
    "parse_config",
    "resolve",
    "config_hash",
    "echo_config",
    "DEFAULT_BER_GRID",
    "TOPOLOGY_NAMES",
]

DEFAULT_BER_GRID = (1e-9, 1e-6, 1e-5, 1e-4, 1e-3, 2e-3, 3e-3, 3.5e-3)

# CLI topology names; "mesh" is the hybrid mesh with the direct hub fabric.
TOPOLOGY_NAMES = {
    "mesh": FabricKind.DIRECT,
    "direct": FabricKind.DIRECT,
    "butterfly": FabricKind.BUTTERFLY,
    "omega": FabricKind.OMEGA,
    "baseline": FabricKind.BASELINE,
}


@dataclass(frozen=True)
class NetworkConfig:
    """Fully resolved description of one simulation run."""

    width: int = 4
    height: int = 4
    cluster_groups: tuple = ()
    hub_attach: tuple = ()
    fabric_kind: str = FabricKind.DIRECT
    traffic: TrafficSpec = field(default_factory=TrafficSpec)
    attack: AttackSpec = field(default_factory=lambda: AttackSpec(links="all"))
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    mitigation: MitigationSpec = field(default_factory=MitigationSpec)
    flit_bits: int = 32
    packet_flits: int = 8
    buffer_depth: int = 4
    hub_queue_packets: int = 2
    hub_ingress_flits: int = 16
    optical_cycles_per_flit: object = "auto"
    optical_latency: int = 1
    ack_cycles: int = 2
    channel_count: int = 8
    channel_utilization_target: float = 0.4
    total_cycles: int = 100_000
    warmup_cycles: int = 5_000
    seed: int = 1
    drain: bool = False
    energy: EnergyConstants = field(default_factory=EnergyConstants)

    @property
    def node_count(self) -> int:
        return self.width * self.height

    @property
    def clusters(self) -> topology.ClusterMap:
        return topology.clusters_from_groups(
            self.cluster_groups, self.hub_attach, self.node_count
        )

    def serialization_cycles(self) -> int:
        """Optical serialization in cycles per flit.

        ``auto`` provisions the channel rate so the benign inter-cluster
        load keeps channels near the configured utilization target; explicit
        integers override.
        """
        if self.optical_cycles_per_flit != "auto":
            return int(self.optical_cycles_per_flit)
        clusters = self.clusters
        n = self.node_count
        if n <= 1 or self.traffic.injection_rate <= 0.0:
            return 1
        sizes = [0] * clusters.hub_count
        for c in clusters.assignments:
            sizes[c] += 1
        inter = sum(n - sizes[c] for c in clusters.assignments) / (n * (n - 1))
        offered_flits = n * self.traffic.injection_rate * inter
        if offered_flits <= 0.0:
            return 1
        cycles = self.channel_utilization_target * clusters.hub_count / offered_flits
        return max(1, round(cycles))

    def round_trip_cycles(self) -> int:
        return 2 * self.optical_latency + self.ack_cycles


@dataclass(frozen=True)
class SweepSpec:
    """Grid of runs: BER x traffic x topology x seed."""

    ber_grid: tuple = DEFAULT_BER_GRID
    traffic: tuple = Pattern.ALL
    topology: tuple = ("mesh",)
    seeds: int = 5

    def __post_init__(self):
        grid = tuple(self.ber_grid)
        if any(not 0.0 <= b <= 1.0 for b in grid):
            raise ConfigurationError("sweep.ber_grid values must lie in [0, 1]")
        if any(a >= b for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("sweep.ber_grid must be strictly increasing")
        if self.seeds < 1:
            raise ConfigurationError("sweep.seeds must be >= 1")


def _schema():
    """Known keys, defaults, and per-key validators."""

    def rate(lo, hi):
        def check(v, key):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not lo <= v <= hi:
                raise ConfigurationError(f"{key}: expected number in [{lo}, {hi}], got {v!r}")
            return float(v)
        return check

    def positive_int(v, key):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ConfigurationError(f"{key}: expected positive integer, got {v!r}")
        return v

    def non_negative_int(v, key):
        if not isinstance(v, int) or isinstance(v, bool) or v < 0:
            raise ConfigurationError(f"{key}: expected non-negative integer, got {v!r}")
        return v

    def boolean(v, key):
        if not isinstance(v, bool):
            raise ConfigurationError(f"{key}: expected true/false, got {v!r}")
        return v

    def choice(options):
        def check(v, key):
            if not isinstance(v, str) or v.lower() not in options:
                raise ConfigurationError(f"{key}: expected one of {sorted(options)}, got {v!r}")
            return v.lower()
        return check

    def cluster_list(v, key):
        if v is None:
            return None
        if not isinstance(v, list) or not all(isinstance(g, list) for g in v):
            raise ConfigurationError(f"{key}: expected list of node-id lists, got {v!r}")
        return tuple(tuple(int(x) for x in g) for g in v)

    def int_list(v, key):
        if v is None:
            return None
        if not isinstance(v, list):
            raise ConfigurationError(f"{key}: expected list of integers, got {v!r}")
        return tuple(int(x) for x in v)

    def links(v, key):
        if v == "all":
            return "all"
        if isinstance(v, list) and all(isinstance(x, str) for x in v):
            return tuple(v)
        raise ConfigurationError(f'{key}: expected "all" or a list of link ids, got {v!r}')

    def auto_or_int(v, key):
        if v == "auto":
            return "auto"
        return positive_int(v, key)

    def float_list(v, key):
        if not isinstance(v, list) or not v:
            raise ConfigurationError(f"{key}: expected non-empty list of numbers, got {v!r}")
        return tuple(float(x) for x in v)

    def name_list(options):
        def check(v, key):
            if isinstance(v, str):
                v = [v]
            if not isinstance(v, list):
                raise ConfigurationError(f"{key}: expected name or list, got {v!r}")
            out = []
            for x in v:
                if not isinstance(x, str) or x.lower() not in options:
                    raise ConfigurationError(
                        f"{key}: expected names from {sorted(options)}, got {x!r}"
                    )
                out.append(x.lower())
            return tuple(out)
        return check

    return {
        "topology": {
            "kind": (choice({"mesh"}), "mesh"),
            "width": (positive_int, 4),
            "height": (positive_int, 4),
            "clusters": (cluster_list, None),
            "hub_attach": (int_list, None),
        },
        "fabric": {
            "kind": (choice(set(FabricKind.ALL) | set(TOPOLOGY_NAMES)), FabricKind.DIRECT),
        },
        "traffic": {
            "pattern": (choice(set(Pattern.ALL)), Pattern.RANDOM),
            "injection_rate": (rate(0.0, 1.0), 0.005),
            "hotspot_node": (non_negative_int, 3),
            "hotspot_fraction": (rate(0.0, 1.0), 0.2),
        },
        "attack": {
            "enabled": (boolean, True),
            "hub": (non_negative_int, 1),
            "links": (links, "all"),
            "ber": (rate(0.0, 1.0), FLOOR_BER),
            "channel": (non_negative_int, 0),
            "decay": (rate(0.0, 100.0), 0.5),
            "floor_ber": (rate(0.0, 1.0), FLOOR_BER),
        },
        "defense": {
            "detector": (choice(set(DetectorMode.ALL)), DetectorMode.OFF),
            "window": (positive_int, 1000),
            "threshold": (rate(1e-12, 1.0), 5e-4),
            "probe_period": (positive_int, 2000),
            "mitigation": (choice(set(Mitigation.ALL)), Mitigation.NONE),
        },
        "engine": {
            "flit_bits": (positive_int, 32),
            "packet_flits": (positive_int, 8),
            "buffer_depth": (positive_int, 4),
            "hub_queue_packets": (positive_int, 2),
            "hub_ingress_flits": (positive_int, 16),
            "optical_cycles_per_flit": (auto_or_int, "auto"),
            "optical_latency": (positive_int, 1),
            "ack_cycles": (non_negative_int, 2),
            "channel_count": (positive_int, 8),
            "channel_utilization_target": (rate(0.01, 1.0), 0.4),
        },
        "sim": {
            "total_cycles": (positive_int, 100_000),
            "warmup_cycles": (non_negative_int, 5_000),
            "seed": (non_negative_int, 1),
            "drain": (boolean, False),
        },
        "energy": {
            "router": (rate(0.0, 1e9), 1.0),
            "electrical_link": (rate(0.0, 1e9), 0.5),
            "optical_conversion": (rate(0.0, 1e9), 2.0),
            "optical_link_flit": (rate(0.0, 1e9), 0.1),
        },
        "sweep": {
            "ber_grid": (float_list, list(DEFAULT_BER_GRID)),
            "traffic": (name_list(set(Pattern.ALL)), list(Pattern.ALL)),
            "topology": (name_list(set(TOPOLOGY_NAMES)), ["mesh"]),
            "seeds": (positive_int, 5),
        },
    }


def _resolve_tree(data: dict) -> dict:
    schema = _schema()
    for section in data:
        if section not in schema:
            raise ConfigurationError(f"unknown config section {section!r}")
        if not isinstance(data[section], dict):
            raise ConfigurationError(f"{section}: expected a mapping")
        for key in data[section]:
            if key not in schema[section]:
                raise ConfigurationError(f"unknown config key {section}.{key!r}")
    resolved = {}
    for section, keys in schema.items():
        resolved[section] = {}
        src = data.get(section, {})
        for key, (check, default) in keys.items():
            value = src.get(key, default)
            resolved[section][key] = check(value, f"{section}.{key}") if value is not None else None
    return resolved


def resolve(data: dict):
    """Resolve a raw config mapping into (NetworkConfig, SweepSpec, resolved dict)."""
    tree = _resolve_tree(data or {})
    topo, fab = tree["topology"], tree["fabric"]
    width, height = topo["width"], topo["height"]
    if topo["clusters"] is None or topo["hub_attach"] is None:
        defaults = topology.default_clusters(width, height)
        groups = _groups_from_map(defaults)
        attach = defaults.hub_attach
        if topo["clusters"] is not None or topo["hub_attach"] is not None:
            raise ConfigurationError(
                "topology.clusters and topology.hub_attach must be given together"
            )
    else:
        groups, attach = topo["clusters"], topo["hub_attach"]
    tree["topology"]["clusters"] = [list(g) for g in groups]
    tree["topology"]["hub_attach"] = list(attach)
    traffic = TrafficSpec(
        pattern=tree["traffic"]["pattern"],
        injection_rate=tree["traffic"]["injection_rate"],
        hotspot_node=tree["traffic"]["hotspot_node"],
        hotspot_fraction=tree["traffic"]["hotspot_fraction"],
    )
    atk = tree["attack"]
    if atk["floor_ber"] > atk["ber"]:
        raise ConfigurationError(
            f"attack.floor_ber {atk['floor_ber']} exceeds attack.ber {atk['ber']}"
        )
    attack = AttackSpec(
        enabled=atk["enabled"],
        malicious_hub=atk["hub"],
        links=atk["links"],
        ber=atk["ber"],
        channel=atk["channel"],
        decay=atk["decay"],
        floor_ber=atk["floor_ber"],
    )
    det = tree["defense"]
    detector = DetectorSpec(
        mode=det["detector"],
        window=det["window"],
        ber_threshold=det["threshold"],
        probe_period=det["probe_period"],
    )
    mitigation = MitigationSpec(action=det["mitigation"])
    eng, sim, ene = tree["engine"], tree["sim"], tree["energy"]
    if sim["warmup_cycles"] >= sim["total_cycles"]:
        raise ConfigurationError(
            f"sim.warmup_cycles {sim['warmup_cycles']} must be below "
            f"sim.total_cycles {sim['total_cycles']}"
        )
    config = NetworkConfig(
        width=width,
        height=height,
        cluster_groups=groups,
        hub_attach=tuple(attach),
        fabric_kind=TOPOLOGY_NAMES[fab["kind"]],
        traffic=traffic,
        attack=attack,
        detector=detector,
        mitigation=mitigation,
        flit_bits=eng["flit_bits"],
        packet_flits=eng["packet_flits"],
        buffer_depth=eng["buffer_depth"],
        hub_queue_packets=eng["hub_queue_packets"],
        hub_ingress_flits=eng["hub_ingress_flits"],
        optical_cycles_per_flit=eng["optical_cycles_per_flit"],
        optical_latency=eng["optical_latency"],
        ack_cycles=eng["ack_cycles"],
        channel_count=eng["channel_count"],
        channel_utilization_target=eng["channel_utilization_target"],
        total_cycles=sim["total_cycles"],
        warmup_cycles=sim["warmup_cycles"],
        seed=sim["seed"],
        drain=sim["drain"],
        energy=EnergyConstants(
            router_traversal=ene["router"],
            electrical_link=ene["electrical_link"],
            optical_conversion=ene["optical_conversion"],
            optical_link_flit=ene["optical_link_flit"],
        ),
    )
    swp = tree["sweep"]
    sweep = SweepSpec(
        ber_grid=tuple(swp["ber_grid"]),
        traffic=tuple(swp["traffic"]),
        topology=tuple(swp["topology"]),
        seeds=swp["seeds"],
    )
    tree["sweep"]["ber_grid"] = [float(b) for b in sweep.ber_grid]
    tree["sweep"]["traffic"] = list(sweep.traffic)
    tree["sweep"]["topology"] = list(sweep.topology)
    tree["attack"]["links"] = (
        "all" if attack.links == "all" else list(attack.links)
    )
    return config, sweep, tree


def _groups_from_map(clusters: topology.ClusterMap):
    groups = [[] for _ in range(clusters.hub_count)]
    for node, c in enumerate(clusters.assignments):
        groups[c].append(node)
    return tuple(tuple(g) for g in groups)


def parse_config(source):
    """Parse a config from a path, YAML/JSON text, or mapping.

    Returns (NetworkConfig, SweepSpec, resolved dict). Errors name the
    offending key; YAML syntax errors carry the line from the parser.
    """
    if isinstance(source, dict):
        return resolve(source)
    text = source
    if isinstance(source, (str, os.PathLike)) and os.path.exists(str(source)):
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    try:
        data = yaml.safe_load(text) if text and str(text).strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config root must be a mapping, got {type(data).__name__}")
    return resolve(data)


def echo_config(tree: dict) -> str:
    """Canonical YAML echo of a resolved config tree."""
    return yaml.safe_dump(tree, sort_keys=True, default_flow_style=False)


def config_hash(tree: dict) -> str:
    """Stable short hash identifying a resolved config."""
    payload = json.dumps(tree, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
