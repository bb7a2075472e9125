"""Attack detection and mitigation.

Detection watches per-link retransmission counts over fixed-size windows of
crossings and raises an alarm when the implied BER crosses a threshold.
Pilot-tone mode adds periodic out-of-band probe packets so quiet links still
accumulate window samples. Mitigations either steer traffic off the alarmed
link (electrically or through an alternate fabric path) or hop the sender to
a wavelength far from the attacker's.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "DetectorMode",
    "Mitigation",
    "DetectorSpec",
    "MitigationSpec",
    "Alarm",
    "Detector",
    "estimate_ber",
    "estimate_attacker_channel",
    "select_shift_channel",
]


class DetectorMode:
    OFF = "off"
    RETX_THRESHOLD = "retx_threshold"
    PILOT_TONE = "pilot_tone"

    ALL = (OFF, RETX_THRESHOLD, PILOT_TONE)


class Mitigation:
    NONE = "none"
    REROUTE_ELECTRICAL = "reroute_electrical"
    REROUTE_FABRIC = "reroute_fabric"
    WAVELENGTH_SHIFT = "wavelength_shift"

    ALL = (NONE, REROUTE_ELECTRICAL, REROUTE_FABRIC, WAVELENGTH_SHIFT)


@dataclass(frozen=True)
class DetectorSpec:
    mode: str = DetectorMode.OFF
    window: int = 1000          # crossings per link per estimation window
    ber_threshold: float = 5e-4
    probe_period: int = 2000    # cycles between pilot probes per link

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"detector window must be >= 1, got {self.window}")
        if not 0.0 < self.ber_threshold < 1.0:
            raise ValueError(f"ber threshold {self.ber_threshold} outside (0, 1)")


@dataclass(frozen=True)
class MitigationSpec:
    action: str = Mitigation.NONE


@dataclass(frozen=True)
class Alarm:
    link: str
    window_index: int
    estimated_ber: float
    raised_cycle: int

    def to_dict(self) -> dict:
        return {
            "link": self.link,
            "window_index": self.window_index,
            "estimated_ber": self.estimated_ber,
            "raised_cycle": self.raised_cycle,
        }


def estimate_ber(failures: int, crossings: int, flit_bits: int, packet_flits: int) -> float:
    """Invert the retransmission formula: observed fraction over f*p."""
    if crossings < 1:
        raise ValueError("need at least one crossing to estimate")
    return (failures / crossings) / (flit_bits * packet_flits)


class Detector:
    """Windowed per-link retransmission monitor."""

    def __init__(self, spec: DetectorSpec, flit_bits: int, packet_flits: int):
        self.spec = spec
        self.flit_bits = flit_bits
        self.packet_flits = packet_flits
        self._crossings = {}
        self._failures = {}
        self._window_index = {}
        self.alarms = []

    def observe(self, link: str, failed: bool, cycle: int):
        """Record one crossing; return an Alarm at a tripped window boundary."""
        if self.spec.mode == DetectorMode.OFF:
            return None
        crossings = self._crossings.get(link, 0) + 1
        failures = self._failures.get(link, 0) + (1 if failed else 0)
        if crossings < self.spec.window:
            self._crossings[link] = crossings
            self._failures[link] = failures
            return None
        index = self._window_index.get(link, 0)
        self._window_index[link] = index + 1
        self._crossings[link] = 0
        self._failures[link] = 0
        estimate = estimate_ber(failures, crossings, self.flit_bits, self.packet_flits)
        if estimate > self.spec.ber_threshold:
            alarm = Alarm(link, index, estimate, cycle)
            self.alarms.append(alarm)
            return alarm
        return None


def estimate_attacker_channel(per_channel_ber: dict) -> int:
    """The attacker sits where the estimated BER peaks (lowest index on ties)."""
    if not per_channel_ber:
        raise ValueError("no per-channel estimates")
    best = None
    for channel in sorted(per_channel_ber):
        value = per_channel_ber[channel]
        if best is None or value > per_channel_ber[best]:
            best = channel
    return best


def select_shift_channel(attacker_channel: int, channel_count: int) -> int:
    """Channel maximizing distance from the attacker (highest index on ties)."""
    if channel_count < 1:
        raise ValueError("need at least one channel")
    best = 0
    for channel in range(channel_count):
        if abs(channel - attacker_channel) >= abs(best - attacker_channel):
            best = channel
    return best
