"""Run statistics: throughput, delay, energy, and per-link attack counters."""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["EnergyConstants", "LinkStats", "Tally", "MetricsReport", "finalize", "energy"]


@dataclass(frozen=True)
class EnergyConstants:
    """Energy per event, in microjoules (relative units scaled to uJ)."""

    router_traversal: float = 1.0
    electrical_link: float = 0.5
    optical_conversion: float = 2.0
    optical_link_flit: float = 0.1


@dataclass
class LinkStats:
    crossings: int = 0
    failures: int = 0

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.crossings if self.crossings else 0.0


@dataclass
class Tally:
    """Raw event counts accumulated by the engine (post-warmup only)."""

    measured_cycles: int = 0
    node_count: int = 0
    delivered_flits: int = 0
    delivered_packets: int = 0
    delay_sum: int = 0
    delivered_flits_per_node: dict = field(default_factory=dict)
    router_traversals: int = 0
    electrical_link_flits: int = 0
    optical_conversions: int = 0
    optical_link_flits: int = 0
    injected_packets: int = 0
    delivered_packets_total: int = 0
    retransmissions: int = 0
    per_link: dict = field(default_factory=dict)

    def link(self, link_id) -> LinkStats:
        stats = self.per_link.get(link_id)
        if stats is None:
            stats = self.per_link[link_id] = LinkStats()
        return stats


@dataclass
class MetricsReport:
    """The quantities the experiments report.

    ``gat`` is delivered flits per cycle network-wide over the measurement
    window, ``gad`` the mean creation-to-delivery latency in cycles (None
    when nothing was delivered).
    """

    gat: float
    throughput_per_ip: float
    gad: object  # float | None
    energy_total: float
    energy_breakdown: dict
    per_link: dict
    counts: dict
    alarms: list = field(default_factory=list)
    config_hash: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "gat": self.gat,
            "throughput_per_ip": self.throughput_per_ip,
            "gad": self.gad,
            "energy_total": self.energy_total,
            "energy_breakdown": dict(self.energy_breakdown),
            "per_link": {
                k: {
                    "crossings": v.crossings,
                    "failures": v.failures,
                    "failure_fraction": v.failure_fraction,
                }
                for k, v in sorted(self.per_link.items())
            },
            "counts": dict(self.counts),
            "alarms": [a.to_dict() for a in self.alarms],
            "config_hash": self.config_hash,
            "seed": self.seed,
        }


def energy(tally: Tally, constants: EnergyConstants):
    """Total energy and its breakdown; linear in the event counts."""
    breakdown = {
        "router": tally.router_traversals * constants.router_traversal,
        "electrical_link": tally.electrical_link_flits * constants.electrical_link,
        "optical_conversion": tally.optical_conversions * constants.optical_conversion,
        "optical_link": tally.optical_link_flits * constants.optical_link_flit,
    }
    return sum(breakdown.values()), breakdown


def finalize(tally: Tally, constants: EnergyConstants, alarms=(), config_hash="", seed=0) -> MetricsReport:
    """Fold raw counters into the report; pure and repeatable."""
    cycles = max(1, tally.measured_cycles)
    gat = tally.delivered_flits / cycles
    per_ip = gat / tally.node_count if tally.node_count else 0.0
    gad = tally.delay_sum / tally.delivered_packets if tally.delivered_packets else None
    total, breakdown = energy(tally, constants)
    counts = {
        "injected": tally.injected_packets,
        "delivered": tally.delivered_packets_total,
        "retransmissions": tally.retransmissions,
        "measured_delivered_flits": tally.delivered_flits,
        "measured_delivered_packets": tally.delivered_packets,
        "measured_cycles": tally.measured_cycles,
    }
    return MetricsReport(
        gat=gat,
        throughput_per_ip=per_ip,
        gad=gad,
        energy_total=total,
        energy_breakdown=breakdown,
        per_link=dict(tally.per_link),
        counts=counts,
        alarms=list(alarms),
        config_hash=config_hash,
        seed=seed,
    )
