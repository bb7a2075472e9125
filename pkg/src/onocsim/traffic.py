"""Synthetic traffic generation.

Four patterns: uniform random, bit reversal, perfect shuffle, and random
with a hotspot node. Injection is Bernoulli per node per cycle at
``injection_rate / packet_flits`` so the offered load in flits per cycle per
node matches the configured rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .topology import ConfigurationError

__all__ = ["Pattern", "TrafficSpec", "pick_destination", "maybe_inject", "InjectionSchedule"]


class Pattern:
    RANDOM = "random"
    BIT_REVERSAL = "bitreversal"
    SHUFFLE = "shuffle"
    HOT_SPOT = "hotspot"

    ALL = (RANDOM, BIT_REVERSAL, SHUFFLE, HOT_SPOT)
    BIT_PERMUTATIONS = (BIT_REVERSAL, SHUFFLE)


@dataclass(frozen=True)
class TrafficSpec:
    pattern: str = Pattern.RANDOM
    injection_rate: float = 0.005  # flits per cycle per node
    hotspot_node: int = 3
    hotspot_fraction: float = 0.2

    def packet_probability(self, packet_flits: int) -> float:
        """Per-node per-cycle probability of starting a packet."""
        return self.injection_rate / packet_flits


def _bit_reverse(value: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (value & 1)
        value >>= 1
    return out


def _rotate_left(value: int, bits: int) -> int:
    return ((value << 1) | (value >> (bits - 1))) & ((1 << bits) - 1)


def pick_destination(spec: TrafficSpec, source: int, node_count: int, rng):
    """Choose a destination for ``source``.

    Bit-permutation patterns may map a node onto itself; the caller skips
    injection for that cycle in that case (the returned value equals
    ``source``).
    """
    if node_count < 2:
        raise ConfigurationError("traffic needs at least 2 nodes")
    if spec.pattern in Pattern.BIT_PERMUTATIONS and node_count & (node_count - 1):
        raise ConfigurationError(
            f"{spec.pattern} traffic needs a power-of-two node count, got {node_count}"
        )
    if spec.pattern == Pattern.RANDOM:
        return _uniform_other(source, node_count, rng)
    if spec.pattern == Pattern.BIT_REVERSAL:
        return _bit_reverse(source, node_count.bit_length() - 1)
    if spec.pattern == Pattern.SHUFFLE:
        return _rotate_left(source, node_count.bit_length() - 1)
    if spec.pattern == Pattern.HOT_SPOT:
        if rng.random() < spec.hotspot_fraction and spec.hotspot_node != source:
            return spec.hotspot_node
        return _uniform_other(source, node_count, rng)
    raise ConfigurationError(f"unknown traffic pattern {spec.pattern!r}")


def _uniform_other(source: int, node_count: int, rng) -> int:
    dest = rng.randrange(node_count - 1)
    return dest if dest < source else dest + 1


def maybe_inject(spec: TrafficSpec, packet_flits: int, rng) -> bool:
    """Bernoulli injection decision, one call per node per cycle."""
    prob = spec.packet_probability(packet_flits)
    if prob <= 0.0:
        return False
    return rng.random() < prob


class InjectionSchedule:
    """Geometric inter-arrival sampler for one node.

    Draws the gap to the next packet start instead of a Bernoulli trial every
    cycle; the resulting arrival process is the same Bernoulli process that
    ``maybe_inject`` realizes, at a fraction of the RNG cost.
    """

    def __init__(self, spec: TrafficSpec, packet_flits: int, rng, start_cycle: int = 0):
        self._rng = rng
        prob = spec.packet_probability(packet_flits)
        if not 0.0 <= prob <= 1.0:
            raise ConfigurationError(f"packet probability {prob} outside [0, 1]")
        self._log_miss = math.log1p(-prob) if 0.0 < prob < 1.0 else None
        self._prob = prob
        self.next_cycle = None
        if prob > 0.0:
            self.next_cycle = start_cycle + self._gap() - 1

    def _gap(self) -> int:
        if self._prob >= 1.0:
            return 1
        u = self._rng.random()
        # P(gap = k) = (1-p)^(k-1) p, k >= 1
        return int(math.log(1.0 - u) / self._log_miss) + 1

    def advance(self):
        self.next_cycle += self._gap()
