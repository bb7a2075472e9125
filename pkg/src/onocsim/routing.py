"""Hierarchical routing over the hybrid network.

Intra-cluster packets take dimension-ordered XY paths. Inter-cluster packets
go XY to the local attach router, cross the hub fabric, then XY from the
remote attach router; when the fabric path is blocked by the avoid set the
packet falls back to an all-electrical XY path across the mesh.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import Fabric, Mesh, Port, xy_path

__all__ = ["RoutePlan", "RoutingError", "plan_route", "route", "next_port"]


class RoutingError(RuntimeError):
    """No route exists under the current avoid set (mitigation failure)."""


@dataclass(frozen=True)
class RoutePlan:
    """Source route for one packet.

    ``elec1``/``elec2`` are inclusive node paths (injection-side and
    delivery-side); ``fabric_legs`` holds one tuple of optical link ids per
    hub-to-hub transmission. Pure electrical plans keep everything in
    ``elec1``.
    """

    src: int
    dst: int
    elec1: tuple
    fabric_legs: tuple
    src_hub: object = None
    dst_hub: object = None
    elec2: tuple = ()

    @property
    def optical_links(self) -> tuple:
        return tuple(link for leg in self.fabric_legs for link in leg)

    def node_sequence(self) -> tuple:
        """Electrical hops plus hub ids, for path reporting."""
        if not self.fabric_legs:
            return self.elec1
        hubs = [f"H{self.src_hub}"]
        for leg in self.fabric_legs:
            last = leg[-1]
            if last.startswith("H") and "->H" in last:
                hubs.append(f"H{last.split('->H')[1]}")
        if hubs[-1] != f"H{self.dst_hub}":
            hubs.append(f"H{self.dst_hub}")
        return self.elec1 + tuple(hubs) + self.elec2


def plan_route(src: int, dst: int, mesh: Mesh, fabric: Fabric, avoid=frozenset()) -> RoutePlan:
    """Plan the full path from src to dst under the given avoid set."""
    if src == dst:
        return RoutePlan(src, dst, (src,), ())
    src_cluster = mesh.clusters.cluster_of(src)
    dst_cluster = mesh.clusters.cluster_of(dst)
    if src_cluster == dst_cluster:
        return RoutePlan(src, dst, xy_path(mesh, src, dst), ())
    legs = fabric.path_legs(src_cluster, dst_cluster, avoid)
    if legs is None:
        return RoutePlan(src, dst, xy_path(mesh, src, dst), ())
    return RoutePlan(
        src,
        dst,
        xy_path(mesh, src, mesh.attach_of_hub(src_cluster)),
        legs,
        src_hub=src_cluster,
        dst_hub=dst_cluster,
        elec2=xy_path(mesh, mesh.attach_of_hub(dst_cluster), dst),
    )


def next_port(mesh: Mesh, here: int, there: int) -> Port:
    """Mesh port leading from ``here`` to the adjacent node ``there``."""
    dx = (there % mesh.width) - (here % mesh.width)
    dy = (there // mesh.width) - (here // mesh.width)
    if dx == 1:
        return Port.EAST
    if dx == -1:
        return Port.WEST
    if dy == 1:
        return Port.SOUTH
    if dy == -1:
        return Port.NORTH
    raise RoutingError(f"nodes {here} and {there} are not mesh neighbors")


def route(current, destination: int, mesh: Mesh, fabric: Fabric, avoid=frozenset()):
    """Next hop from ``current`` toward ``destination``.

    Routers return the outgoing port (``Port.HUB`` when handing off to the
    attached hub); hubs (given as ``"H<k>"`` strings) return the next optical
    leg. Mirrors the per-packet plan so recorded paths match predictions.
    """
    if isinstance(current, str) and current.startswith("H"):
        hub = int(current[1:])
        dst_cluster = mesh.clusters.cluster_of(destination)
        if hub == dst_cluster:
            attach = mesh.attach_of_hub(hub)
            return ("eject", attach)
        legs = fabric.path_legs(hub, dst_cluster, avoid)
        if legs is None:
            raise RoutingError(
                f"no fabric path from hub {hub} to hub {dst_cluster} under avoid set"
            )
        return ("leg", legs[0])
    plan = plan_route(current, destination, mesh, fabric, avoid)
    if plan.elec1[-1] == current and plan.fabric_legs:
        return Port.HUB
    if current == destination:
        return Port.LOCAL
    path = plan.elec1 if current in plan.elec1 else plan.elec2
    idx = path.index(current)
    return next_port(mesh, current, path[idx + 1])
