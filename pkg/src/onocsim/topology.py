"""Hybrid network construction: electrical mesh clusters plus an optical
inter-hub fabric (direct all-to-all or a multistage delta network).

Node ids are row-major (``id = y * width + x``). Optical links carry stable
string ids: ``"H1->H2"`` for direct hub pairs, ``"ST<k>.<p>"`` for the output
``p`` of delta stage ``k``, and ``"OUT.<p>"`` for the final stage outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

__all__ = [
    "Port",
    "ClusterMap",
    "FabricKind",
    "Fabric",
    "Mesh",
    "ConfigurationError",
    "default_clusters",
    "build_mesh",
    "build_fabric",
    "validate",
    "xy_path",
    "manhattan",
]


class ConfigurationError(ValueError):
    """Raised for inconsistent topology or simulation configuration."""


class Port(IntEnum):
    LOCAL = 0
    NORTH = 1
    SOUTH = 2
    EAST = 3
    WEST = 4
    HUB = 5


@dataclass(frozen=True)
class ClusterMap:
    """Node-to-cluster assignment plus the router each hub is wired to."""

    assignments: tuple  # node id -> cluster index
    hub_attach: tuple   # hub id -> attach node id

    @property
    def hub_count(self) -> int:
        return len(self.hub_attach)

    def cluster_of(self, node: int) -> int:
        return self.assignments[node]


def default_clusters(width: int, height: int) -> ClusterMap:
    """Default hub placement: one hub per quadrant.

    The 4x4 and 8x8 layouts pin the attach nodes used throughout; other
    power-of-two meshes get quadrant clusters with center-adjacent attach
    nodes, and tiny meshes collapse to a single cluster.
    """
    n = width * height
    if (width, height) == (4, 4):
        groups = [(0, 1, 4, 5), (2, 3, 6, 7), (8, 9, 12, 13), (10, 11, 14, 15)]
        attach = (5, 6, 9, 10)
        assignments = [0] * n
        for c, grp in enumerate(groups):
            for node in grp:
                assignments[node] = c
        return ClusterMap(tuple(assignments), attach)
    if (width, height) == (8, 8):
        # Clockwise quadrants so hub 2 lands on node 54 (bottom right).
        quadrant_to_cluster = {(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}
        assignments = []
        for node in range(n):
            x, y = node % 8, node // 8
            assignments.append(quadrant_to_cluster[(x // 4, y // 4)])
        return ClusterMap(tuple(assignments), (9, 14, 54, 49))
    if width < 4 or height < 4:
        return ClusterMap(tuple([0] * n), (0,))
    # Generic quadrants, row-major cluster order, attach near quadrant center.
    half_w, half_h = width // 2, height // 2
    assignments = []
    for node in range(n):
        x, y = node % width, node // width
        assignments.append((1 if x >= half_w else 0) + 2 * (1 if y >= half_h else 0))
    attach = []
    for cy in (0, 1):
        for cx in (0, 1):
            ax = cx * half_w + (half_w - 1) // 2
            ay = cy * half_h + (half_h - 1) // 2
            attach.append(ay * width + ax)
    return ClusterMap(tuple(assignments), tuple(attach))


@dataclass(frozen=True)
class Mesh:
    """Electrical mesh with hub attach points."""

    width: int
    height: int
    clusters: ClusterMap

    @property
    def node_count(self) -> int:
        return self.width * self.height

    def coords(self, node: int):
        return node % self.width, node // self.width

    def node_at(self, x: int, y: int) -> int:
        return y * self.width + x

    def neighbor(self, node: int, port: Port):
        x, y = self.coords(node)
        if port == Port.NORTH:
            return node - self.width if y > 0 else None
        if port == Port.SOUTH:
            return node + self.width if y < self.height - 1 else None
        if port == Port.EAST:
            return node + 1 if x < self.width - 1 else None
        if port == Port.WEST:
            return node - 1 if x > 0 else None
        return None

    def electrical_links(self):
        """All directed mesh links as (src, dst) pairs."""
        links = []
        for node in range(self.node_count):
            for port in (Port.NORTH, Port.SOUTH, Port.EAST, Port.WEST):
                other = self.neighbor(node, port)
                if other is not None:
                    links.append((node, other))
        return links

    def hub_of_node(self, node: int) -> int:
        return self.clusters.cluster_of(node)

    def attach_of_hub(self, hub: int) -> int:
        return self.clusters.hub_attach[hub]


def build_mesh(width: int, height: int, clusters: ClusterMap) -> Mesh:
    """Construct the electrical mesh and check cluster consistency."""
    if width < 2 or height < 2:
        raise ConfigurationError(f"mesh must be at least 2x2, got {width}x{height}")
    n = width * height
    if len(clusters.assignments) != n:
        raise ConfigurationError(
            f"cluster map covers {len(clusters.assignments)} nodes, mesh has {n}"
        )
    hub_count = clusters.hub_count
    for node, c in enumerate(clusters.assignments):
        if not 0 <= c < hub_count:
            raise ConfigurationError(f"node {node} assigned to unknown cluster {c}")
    for hub, node in enumerate(clusters.hub_attach):
        if not 0 <= node < n:
            raise ConfigurationError(f"hub {hub} attach node {node} outside mesh")
        if clusters.cluster_of(node) != hub:
            raise ConfigurationError(
                f"hub {hub} attach node {node} lies in cluster {clusters.cluster_of(node)}"
            )
    return Mesh(width, height, clusters)


class FabricKind:
    DIRECT = "direct"
    BUTTERFLY = "butterfly"
    OMEGA = "omega"
    BASELINE = "baseline"

    ALL = (DIRECT, BUTTERFLY, OMEGA, BASELINE)
    DELTA = (BUTTERFLY, OMEGA, BASELINE)


def _rotl(value: int, bits: int) -> int:
    return ((value << 1) | (value >> (bits - 1))) & ((1 << bits) - 1)


def _rotr(value: int, bits: int) -> int:
    return ((value >> 1) | ((value & 1) << (bits - 1))) & ((1 << bits) - 1)


def _gap_permutation(kind: str, stage: int, bits: int):
    """Wiring applied to switch-output positions entering ``stage``."""
    if kind == FabricKind.OMEGA:
        return lambda p: _rotl(p, bits)
    if kind == FabricKind.BUTTERFLY:
        if stage == 0:
            return lambda p: p
        # Exchange bit 0 with bit ``stage`` (indirect binary cube wiring).
        def swap(p, k=stage):
            b0 = p & 1
            bk = (p >> k) & 1
            if b0 == bk:
                return p
            return p ^ 1 ^ (1 << k)
        return swap
    if kind == FabricKind.BASELINE:
        if stage == 0:
            return lambda p: p
        # Inverse shuffle on the low (bits - stage + 1) bits.
        def unshuffle(p, k=stage, b=bits):
            low_bits = b - k + 1
            mask = (1 << low_bits) - 1
            return (p & ~mask) | _rotr(p & mask, low_bits)
        return unshuffle
    raise ConfigurationError(f"unknown fabric kind {kind!r}")


@dataclass(frozen=True)
class Fabric:
    """Optical inter-hub fabric.

    ``links`` enumerates every directed optical link id once. For the direct
    fabric each link rides its destination hub's receive channel, so the
    shared resource id is ``RX<j>``; delta stage links are their own resource.
    """

    kind: str
    endpoints: int
    links: tuple
    resource_of: dict
    stages: int

    def path_legs(self, src_hub: int, dst_hub: int, avoid=frozenset()):
        """Optical legs from src hub to dst hub, or None if blocked.

        A leg is a tuple of link ids crossed in one transmission; direct
        detours store and forward at intermediate hubs (one leg per hop)
        while delta paths cross all their stage links in a single leg.
        """
        if src_hub == dst_hub:
            return ()
        if self.kind == FabricKind.DIRECT:
            direct = f"H{src_hub}->H{dst_hub}"
            if direct not in avoid:
                return ((direct,),)
            # Shortest detour over the residual complete digraph.
            best = None
            for mid in range(self.endpoints):
                if mid in (src_hub, dst_hub):
                    continue
                first, second = f"H{src_hub}->H{mid}", f"H{mid}->H{dst_hub}"
                if first in avoid or second in avoid:
                    continue
                if best is None:
                    best = ((first,), (second,))
            return best
        leg = self._delta_path(src_hub, dst_hub)
        if any(link in avoid for link in leg):
            return None
        return (leg,)

    def _delta_path(self, src_hub: int, dst_hub: int):
        bits = self.stages
        pos = src_hub
        links = []
        for stage in range(self.stages):
            pos = _gap_permutation(self.kind, stage, bits)(pos)
            dest_bit = (dst_hub >> (self.stages - 1 - stage)) & 1
            pos = (pos & ~1) | dest_bit
            if stage < self.stages - 1:
                links.append(f"ST{stage}.{pos}")
            else:
                links.append(f"OUT.{pos}")
        if pos != dst_hub:
            raise ConfigurationError(
                f"{self.kind} fabric is not delta: {src_hub}->{dst_hub} exits at {pos}"
            )
        return tuple(links)


def build_fabric(kind: str, endpoints: int) -> Fabric:
    """Build the optical fabric graph for ``endpoints`` hubs."""
    kind = kind.lower()
    if kind not in FabricKind.ALL:
        raise ConfigurationError(f"unknown fabric kind {kind!r}")
    if kind == FabricKind.DIRECT:
        links = tuple(
            f"H{i}->H{j}"
            for i in range(endpoints)
            for j in range(endpoints)
            if i != j
        )
        resource_of = {link: f"RX{link.split('->H')[1]}" for link in links}
        return Fabric(kind, endpoints, links, resource_of, 0)
    if endpoints < 2 or endpoints & (endpoints - 1):
        raise ConfigurationError(
            f"{kind} fabric needs a power-of-two endpoint count, got {endpoints}"
        )
    stages = endpoints.bit_length() - 1
    links = []
    for stage in range(stages - 1):
        links.extend(f"ST{stage}.{p}" for p in range(endpoints))
    links.extend(f"OUT.{p}" for p in range(endpoints))
    fabric = Fabric(kind, endpoints, tuple(links), {l: l for l in links}, stages)
    # Delta sanity: every endpoint pair must route to the right exit.
    for src in range(endpoints):
        for dst in range(endpoints):
            if src != dst:
                fabric._delta_path(src, dst)
    return fabric


def manhattan(mesh: Mesh, a: int, b: int) -> int:
    ax, ay = mesh.coords(a)
    bx, by = mesh.coords(b)
    return abs(ax - bx) + abs(ay - by)


def xy_path(mesh: Mesh, src: int, dst: int):
    """Dimension-ordered node path from src to dst, inclusive."""
    path = [src]
    x, y = mesh.coords(src)
    dx, dy = mesh.coords(dst)
    while x != dx:
        x += 1 if dx > x else -1
        path.append(mesh.node_at(x, y))
    while y != dy:
        y += 1 if dy > y else -1
        path.append(mesh.node_at(x, y))
    return tuple(path)


def _cluster_reachable(mesh: Mesh, cluster: int):
    """Nodes reachable from the cluster's attach node via intra-cluster links."""
    members = [n for n in range(mesh.node_count) if mesh.clusters.cluster_of(n) == cluster]
    if not members:
        return set(), members
    start = mesh.clusters.hub_attach[cluster]
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for port in (Port.NORTH, Port.SOUTH, Port.EAST, Port.WEST):
            other = mesh.neighbor(node, port)
            if other is not None and other not in seen:
                if mesh.clusters.cluster_of(other) == cluster:
                    seen.add(other)
                    frontier.append(other)
    return seen, members


def clusters_from_groups(groups, attach, node_count: int) -> ClusterMap:
    """Build a ClusterMap from per-cluster node groups.

    Raises if any node is missing or doubly assigned; validate() reports the
    same problems as data instead.
    """
    assignments = [-1] * node_count
    for c, grp in enumerate(groups):
        for node in grp:
            if not 0 <= node < node_count:
                raise ConfigurationError(f"cluster {c} names node {node} outside mesh")
            if assignments[node] != -1:
                raise ConfigurationError(
                    f"node {node} assigned to clusters {assignments[node]} and {c}"
                )
            assignments[node] = c
    for node, c in enumerate(assignments):
        if c == -1:
            raise ConfigurationError(f"node {node} belongs to no cluster")
    return ClusterMap(tuple(assignments), tuple(attach))


def validate(config) -> list:
    """Collect configuration violations; an empty list means valid."""
    violations = []
    node_count = config.width * config.height
    try:
        clusters = clusters_from_groups(config.cluster_groups, config.hub_attach, node_count)
        mesh = build_mesh(config.width, config.height, clusters)
    except ConfigurationError as exc:
        return [str(exc)]
    try:
        fabric = build_fabric(config.fabric_kind, clusters.hub_count)
    except ConfigurationError as exc:
        return [str(exc)]
    for cluster in range(clusters.hub_count):
        reachable, members = _cluster_reachable(mesh, cluster)
        for node in members:
            if node not in reachable:
                violations.append(
                    f"node {node} cannot reach attach node "
                    f"{clusters.hub_attach[cluster]} inside cluster {cluster}"
                )
    known = set(fabric.links)
    for link in config.attack.resolved_links(fabric):
        if link not in known:
            violations.append(f"unknown link {link!r} in attack specification")
    return violations
