"""Gain-competition attack model.

A compromised hub raises the bit error rate of chosen optical links. The
per-packet retransmission probability is ``BER * flit_bits * packet_flits``
clamped to one, and the BER seen by a transmission decays by a fixed number
of decades per wavelength channel of separation from the attacker.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import Fabric, FabricKind

__all__ = [
    "AttackSpec",
    "retransmit_probability",
    "channel_ber",
    "sample_transmission",
    "round_trip_delay",
]

FLOOR_BER = 1e-9


@dataclass(frozen=True)
class AttackSpec:
    """Which links are under attack and how hard.

    ``links`` is either the string ``"all"`` or a tuple of link ids;
    ``"Hi->Hj"`` entries are expanded to the unique fabric path for
    multistage fabrics.
    """

    enabled: bool = True
    malicious_hub: int = 1
    links: object = ("H1->H2",)
    ber: float = FLOOR_BER
    channel: int = 0
    decay: float = 0.5  # BER decades lost per channel of separation
    floor_ber: float = FLOOR_BER

    def resolved_links(self, fabric: Fabric) -> tuple:
        """Concrete attacked link ids for ``fabric``."""
        if not self.enabled:
            return ()
        if self.links == "all":
            return fabric.links
        resolved = []
        known = set(fabric.links)
        for entry in self.links:
            if entry in known:
                resolved.append(entry)
                continue
            pair = _parse_pair(entry)
            if pair is not None and fabric.kind != FabricKind.DIRECT:
                src, dst = pair
                if 0 <= src < fabric.endpoints and 0 <= dst < fabric.endpoints and src != dst:
                    legs = fabric.path_legs(src, dst)
                    for leg in legs:
                        resolved.extend(leg)
                    continue
            resolved.append(entry)  # left as-is so validation can flag it
        return tuple(resolved)


def _parse_pair(entry: str):
    if not isinstance(entry, str) or "->" not in entry:
        return None
    left, right = entry.split("->", 1)
    if left.startswith("H") and right.startswith("H"):
        try:
            return int(left[1:]), int(right[1:])
        except ValueError:
            return None
    return None


def retransmit_probability(ber: float, flit_bits: int, packet_flits: int) -> float:
    """Packet retransmission probability: ``min(1, ber * f * p)``."""
    if not 0.0 <= ber <= 1.0:
        raise ValueError(f"ber {ber} outside [0, 1]")
    return min(1.0, ber * flit_bits * packet_flits)


def channel_ber(attack: AttackSpec, attacked, link, channel: int) -> float:
    """Effective BER on ``link`` for a transmission on ``channel``.

    ``attacked`` is the resolved attacked-link set. Unattacked links sit at
    the floor; attacked links decay from the attack BER by ``decay`` decades
    per channel of separation from the attacker's wavelength, never below
    the floor.
    """
    if not attack.enabled or link not in attacked:
        return attack.floor_ber
    distance = abs(channel - attack.channel)
    return max(attack.floor_ber, attack.ber * 10.0 ** (-attack.decay * distance))


def sample_transmission(prob: float, rng) -> bool:
    """True when the packet is delivered, False when it must be resent."""
    if prob <= 0.0:
        return True
    if prob >= 1.0:
        return False
    return rng.random() >= prob


def round_trip_delay(link_latency: int = 1, ack_latency: int = 2) -> int:
    """Cycles from a failed tail flit to the retransmission becoming ready."""
    return 2 * link_latency + ack_latency
