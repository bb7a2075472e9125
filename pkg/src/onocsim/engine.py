"""Cycle-accurate simulation core.

Electrical routers are wormhole switches with per-port input FIFOs, credit
flow control, and round-robin output arbitration; one hop costs one router
cycle plus one link cycle, streaming one flit per link per cycle. Hubs
assemble packets off the mesh, queue them per outgoing optical link, and
transmit over shared wavelength channels (the direct fabric shares one
receive channel per destination hub; delta stage links are individual
resources). The tail flit of every optical crossing is sampled against the
link's retransmission probability; failures requeue the retained copy at the
transmitting hub one round trip later.

Phase order inside a cycle: injection, electrical traversal, optical
transmission and failure sampling, retransmission release, bookkeeping.
Blocked entities sleep and are re-activated by credit releases or scheduled
events, so cost tracks actual activity instead of network size.
"""

from __future__ import annotations

import heapq
from collections import deque

from .config import NetworkConfig, config_hash
from .defense import (
    Detector,
    DetectorMode,
    Mitigation,
    estimate_attacker_channel,
    select_shift_channel,
)
from .metrics import MetricsReport, Tally, finalize
from .optical import channel_ber, retransmit_probability, sample_transmission
from .routing import RoutePlan, plan_route
from .rng import substream
from .topology import Port, build_fabric, build_mesh, validate, xy_path
from .traffic import InjectionSchedule, pick_destination

__all__ = ["Engine", "Packet", "run", "SimulationError"]

LOCAL, NORTH, SOUTH, EAST, WEST, HUB = (
    int(Port.LOCAL), int(Port.NORTH), int(Port.SOUTH), int(Port.EAST), int(Port.WEST), int(Port.HUB),
)
_OPPOSITE = {NORTH: SOUTH, SOUTH: NORTH, EAST: WEST, WEST: EAST}
_PORT_ORDER = (LOCAL, NORTH, SOUTH, EAST, WEST, HUB)
_HOP_CYCLES = 2  # one router cycle plus one link cycle
_SHIFT_PROBES_PER_CHANNEL = 4


class SimulationError(RuntimeError):
    """Internal invariant violation or invalid configuration."""


class Packet:
    __slots__ = (
        "pid", "src", "dst", "creation_cycle", "plan", "port_map", "leg_index",
        "retransmissions", "probe", "flits_seen", "delivered_cycle", "avoid_snapshot",
    )

    def __init__(self, pid, src, dst, creation_cycle, plan, port_map, avoid_snapshot):
        self.pid = pid
        self.src = src
        self.dst = dst
        self.creation_cycle = creation_cycle
        self.plan = plan
        self.port_map = port_map
        self.leg_index = 0
        self.retransmissions = 0
        self.probe = False
        self.flits_seen = 0
        self.delivered_cycle = None
        self.avoid_snapshot = avoid_snapshot


class _Transmission:
    __slots__ = ("packet", "hub", "leg", "failed", "end_cycle", "probe_link", "probe_channel")

    def __init__(self, packet, hub, leg, failed, end_cycle, probe_link=None, probe_channel=None):
        self.packet = packet
        self.hub = hub
        self.leg = leg
        self.failed = failed
        self.end_cycle = end_cycle
        self.probe_link = probe_link
        self.probe_channel = probe_channel


class _Hub:
    __slots__ = ("ingress", "ingress_counts", "out_queues", "egress", "egress_credits", "queue_rr")

    def __init__(self, egress_credits):
        self.ingress = deque()
        self.ingress_counts = {}
        self.out_queues = {}
        self.egress = deque()
        self.egress_credits = egress_credits
        self.queue_rr = 0


class Engine:
    """One deterministic simulation run."""

    def __init__(self, config: NetworkConfig, resolved_tree=None):
        violations = validate(config)
        if violations:
            raise SimulationError("invalid configuration: " + "; ".join(violations))
        self.cfg = config
        self.mesh = build_mesh(config.width, config.height, config.clusters)
        self.fabric = build_fabric(config.fabric_kind, self.mesh.clusters.hub_count)
        self.attacked = frozenset(config.attack.resolved_links(self.fabric))
        self.cycle = 0
        self.serialization = config.serialization_cycles()
        self.link_occupancy = config.packet_flits * self.serialization + config.optical_latency
        self.rtt = config.round_trip_cycles()
        self.hash = config_hash(resolved_tree) if resolved_tree else ""

        n = self.mesh.node_count
        hubs = self.mesh.clusters.hub_count
        self.in_buf = [[deque() for _ in range(6)] for _ in range(n)]
        self.out_hold = [[None] * 6 for _ in range(n)]
        self.rr = [[0] * 6 for _ in range(n)]
        self.out_credit = [[0] * 6 for _ in range(n)]
        self.neighbors = [[None] * 6 for _ in range(n)]
        for node in range(n):
            for port in (NORTH, SOUTH, EAST, WEST):
                other = self.mesh.neighbor(node, Port(port))
                self.neighbors[node][port] = other
                if other is not None:
                    self.out_credit[node][port] = config.buffer_depth
        self.attach_of = list(self.mesh.clusters.hub_attach)
        self.hub_at_node = {}
        for hub, node in enumerate(self.attach_of):
            self.hub_at_node[node] = hub
            self.out_credit[node][HUB] = config.hub_ingress_flits
        self.hubs = [_Hub(config.buffer_depth) for _ in range(hubs)]

        self.busy_until = {res: 0 for res in sorted(set(self.fabric.resource_of.values()))}
        self.next_free_min = 0
        self.live_tx = []

        self.events = {}
        self.event_cycles = []
        self.retx_heap = []
        self._retx_seq = 0

        seed = config.seed
        self.link_rng = {link: substream(seed, "link", link) for link in self.fabric.links}
        self.inj_heap = []
        self.schedules = []
        for node in range(n):
            rng = substream(seed, "traffic", node)
            sched = InjectionSchedule(config.traffic, config.packet_flits, rng, start_cycle=1)
            self.schedules.append((sched, rng))
            if sched.next_cycle is not None:
                heapq.heappush(self.inj_heap, (sched.next_cycle, node))

        self.source_queues = [deque() for _ in range(n)]
        self.inj_active = set()
        self.active = set()
        self.assembly_active = set()
        self.egress_active = set()
        self.queued_packets = 0

        self.detector = Detector(config.detector, config.flit_bits, config.packet_flits)
        self.alarms = []
        self.mitigation_failures = []
        self.avoid = set()
        self.avoid_frozen = frozenset()
        self.channel_override = {}
        self._shift_state = {}
        self.pending_probes = []
        self._probe_seq = 0
        self.next_probe = {}
        if config.detector.mode == DetectorMode.PILOT_TONE:
            for link in self.fabric.links:
                self.next_probe[link] = config.detector.probe_period

        self.tally = Tally(node_count=n)
        self.injected = 0
        self.delivered = 0
        self._pid = 0
        self.delivered_log = []
        self._q_cache = {}
        self.injection_enabled = True
        self.drained_empty = None

    # ------------------------------------------------------------------ utils

    def _measured(self) -> bool:
        return self.cfg.warmup_cycles < self.cycle <= self.cfg.total_cycles

    def _schedule(self, cycle, item):
        bucket = self.events.get(cycle)
        if bucket is None:
            self.events[cycle] = [item]
            heapq.heappush(self.event_cycles, cycle)
        else:
            bucket.append(item)

    def _q_of(self, link, channel):
        key = (link, channel)
        prob = self._q_cache.get(key)
        if prob is None:
            ber = channel_ber(self.cfg.attack, self.attacked, link, channel)
            prob = retransmit_probability(ber, self.cfg.flit_bits, self.cfg.packet_flits)
            self._q_cache[key] = prob
        return prob

    def _leg_channel(self, leg):
        for link in leg:
            if link in self.channel_override:
                return self.channel_override[link]
        return 0

    def _leg_receiver(self, packet, leg):
        last = leg[-1]
        if last.startswith("H") and "->H" in last:
            return int(last.split("->H")[1])
        return packet.plan.dst_hub

    def _plan(self, src, dst) -> RoutePlan:
        if not self.avoid:
            return plan_route(src, dst, self.mesh, self.fabric)
        if self.cfg.mitigation.action == Mitigation.REROUTE_FABRIC:
            return plan_route(src, dst, self.mesh, self.fabric, self.avoid_frozen)
        plan = plan_route(src, dst, self.mesh, self.fabric)
        if any(link in self.avoid for link in plan.optical_links):
            return RoutePlan(src, dst, xy_path(self.mesh, src, dst), ())
        return plan

    def _port_map(self, plan: RoutePlan):
        pm = {}
        path = plan.elec1
        for a, b in zip(path, path[1:]):
            pm[a] = _mesh_port(self.mesh.width, a, b)
        if plan.fabric_legs:
            pm[path[-1]] = HUB
            path2 = plan.elec2
            for a, b in zip(path2, path2[1:]):
                pm[a] = _mesh_port(self.mesh.width, a, b)
            pm[path2[-1]] = LOCAL
        else:
            pm[path[-1]] = LOCAL
        return pm

    # ------------------------------------------------------------- phase 1

    def _phase_injection(self):
        c = self.cycle
        if self.injection_enabled:
            while self.inj_heap and self.inj_heap[0][0] <= c:
                fire_cycle, node = heapq.heappop(self.inj_heap)
                sched, rng = self.schedules[node]
                dest = pick_destination(self.cfg.traffic, node, self.mesh.node_count, rng)
                if dest != node:
                    try:
                        plan = self._plan(node, dest)
                    except Exception as exc:  # no route under avoid set
                        self.mitigation_failures.append((fire_cycle, node, dest, str(exc)))
                        plan = None
                    if plan is not None:
                        packet = Packet(
                            self._pid, node, dest, fire_cycle, plan,
                            self._port_map(plan), self.avoid_frozen,
                        )
                        self._pid += 1
                        self.injected += 1
                        self.source_queues[node].append([packet, 0])
                        self.inj_active.add(node)
                sched.advance()
                heapq.heappush(self.inj_heap, (sched.next_cycle, node))
        if not self.inj_active:
            return
        depth = self.cfg.buffer_depth
        p = self.cfg.packet_flits
        stalled = []
        for node in sorted(self.inj_active):
            queue = self.source_queues[node]
            if not queue:
                stalled.append(node)
                continue
            buf = self.in_buf[node][LOCAL]
            if len(buf) >= depth:
                stalled.append(node)  # woken when a LOCAL slot frees up
                continue
            entry = queue[0]
            packet, seq = entry
            buf.append((packet, seq))
            self.active.add(node)
            if seq + 1 >= p:
                queue.popleft()
                if not queue:
                    stalled.append(node)
            else:
                entry[1] = seq + 1
        for node in stalled:
            self.inj_active.discard(node)

    # ------------------------------------------------------------- phase 2

    def _deliver_flit(self, node, packet, seq):
        p = self.cfg.packet_flits
        if seq != packet.flits_seen:
            raise SimulationError(
                f"wormhole violation: packet {packet.pid} flit {seq} after {packet.flits_seen}"
            )
        packet.flits_seen += 1
        measured = self._measured()
        if measured:
            self.tally.delivered_flits += 1
            per_node = self.tally.delivered_flits_per_node
            per_node[node] = per_node.get(node, 0) + 1
        if seq == p - 1:
            packet.delivered_cycle = self.cycle
            self.delivered += 1
            if measured:
                self.tally.delivered_packets += 1
                self.tally.delay_sum += self.cycle - packet.creation_cycle
            self.delivered_log.append(packet)

    def _push(self, node, out_port, in_port, packet, seq):
        """Move one flit through the switch and release the upstream slot."""
        measured = self._measured()
        if measured:
            self.tally.router_traversals += 1
        if out_port == LOCAL:
            self._deliver_flit(node, packet, seq)
        elif out_port == HUB:
            if measured:
                self.tally.electrical_link_flits += 1
            self.out_credit[node][HUB] -= 1
            hub = self.hub_at_node[node]
            self._schedule(self.cycle + _HOP_CYCLES, ("hubin", hub, packet, seq))
        else:
            if measured:
                self.tally.electrical_link_flits += 1
            self.out_credit[node][out_port] -= 1
            other = self.neighbors[node][out_port]
            self._schedule(
                self.cycle + _HOP_CYCLES, ("arr", other, _OPPOSITE[out_port], packet, seq)
            )
        if in_port == LOCAL:
            if self.source_queues[node]:
                self.inj_active.add(node)
        elif in_port == HUB:
            hub = self.hub_at_node[node]
            state = self.hubs[hub]
            state.egress_credits += 1
            if state.egress:
                self.egress_active.add(hub)
        else:
            upstream = self.neighbors[node][in_port]
            self.out_credit[upstream][_OPPOSITE[in_port]] += 1
            self.active.add(upstream)

    def _process_router(self, node):
        in_bufs = self.in_buf[node]
        holds = self.out_hold[node]
        p = self.cfg.packet_flits
        candidates = {}
        for in_port in range(6):
            buf = in_bufs[in_port]
            if not buf:
                continue
            packet, seq = buf[0]
            out_port = packet.port_map[node]
            hold = holds[out_port]
            if hold is not None:
                if hold[0] is packet and hold[1] == in_port:
                    candidates[out_port] = [(in_port, True)]
                # else blocked behind another worm; woken when the hold clears
            elif seq == 0:
                candidates.setdefault(out_port, []).append((in_port, False))
        progressed = False
        credits = self.out_credit[node]
        for out_port in _PORT_ORDER:
            cands = candidates.get(out_port)
            if not cands:
                continue
            if out_port != LOCAL and credits[out_port] <= 0:
                continue  # backpressure; the credit release re-activates us
            if cands[0][1]:
                in_port = cands[0][0]
            else:
                pointer = self.rr[node][out_port]
                in_port = min(cands, key=lambda c: (c[0] - pointer) % 6)[0]
                self.rr[node][out_port] = (in_port + 1) % 6
            buf = in_bufs[in_port]
            packet, seq = buf.popleft()
            if seq == 0 and p > 1:
                holds[out_port] = (packet, in_port)
            if seq == p - 1:
                holds[out_port] = None
            self._push(node, out_port, in_port, packet, seq)
            progressed = True
        if progressed:
            self.active.add(node)

    def _phase_electrical(self):
        c = self.cycle
        while self.event_cycles and self.event_cycles[0] <= c:
            heapq.heappop(self.event_cycles)
        current = self.active
        self.active = set()
        bucket = self.events.pop(c, None)
        optical_items = None
        if bucket:
            for item in bucket:
                kind = item[0]
                if kind == "arr":
                    _, node, port, packet, seq = item
                    buf = self.in_buf[node][port]
                    buf.append((packet, seq))
                    current.add(node)
                elif kind == "hubin":
                    _, hub, packet, seq = item
                    state = self.hubs[hub]
                    state.ingress.append((packet, seq))
                    counts = state.ingress_counts
                    counts[packet.pid] = counts.get(packet.pid, 0) + 1
                    self.assembly_active.add(hub)
                else:
                    if optical_items is None:
                        optical_items = []
                    optical_items.append(item)
        for node in sorted(current):
            self._process_router(node)
        if self.egress_active:
            pending = sorted(self.egress_active)
            self.egress_active = set()
            p = self.cfg.packet_flits
            for hub in pending:
                state = self.hubs[hub]
                if not state.egress or state.egress_credits <= 0:
                    continue  # woken by the next credit release or arrival
                entry = state.egress[0]
                packet, seq = entry
                state.egress_credits -= 1
                attach = self.attach_of[hub]
                self._schedule(c + _HOP_CYCLES, ("arr", attach, HUB, packet, seq))
                if seq + 1 >= p:
                    state.egress.popleft()
                else:
                    entry[1] = seq + 1
                if state.egress and state.egress_credits > 0:
                    self.egress_active.add(hub)
        return optical_items

    # ------------------------------------------------------------- phase 3

    def _record_sample(self, link, failed):
        if self._measured():
            stats = self.tally.link(link)
            stats.crossings += 1
            if failed:
                stats.failures += 1
            self.tally.optical_link_flits += self.cfg.packet_flits
        alarm = self.detector.observe(link, failed, self.cycle)
        if alarm is not None:
            self.alarms.append(alarm)
            self._apply_mitigation(alarm)

    def _apply_mitigation(self, alarm):
        action = self.cfg.mitigation.action
        if action in (Mitigation.REROUTE_ELECTRICAL, Mitigation.REROUTE_FABRIC):
            if alarm.link not in self.avoid:
                self.avoid.add(alarm.link)
                self.avoid_frozen = frozenset(self.avoid)
        elif action == Mitigation.WAVELENGTH_SHIFT:
            if alarm.link not in self._shift_state:
                self._shift_state[alarm.link] = {
                    ch: [0, 0] for ch in range(self.cfg.channel_count)
                }
                for ch in range(self.cfg.channel_count):
                    for _ in range(_SHIFT_PROBES_PER_CHANNEL):
                        self._probe_seq += 1
                        heapq.heappush(
                            self.pending_probes,
                            (self.cycle + 1, self._probe_seq, alarm.link, ch, "shift"),
                        )

    def _finish_shift(self, link):
        counts = self._shift_state[link]
        fp = self.cfg.flit_bits * self.cfg.packet_flits
        estimates = {
            ch: (fails / total) / fp if total else 0.0
            for ch, (fails, total) in counts.items()
        }
        attacker = estimate_attacker_channel(estimates)
        self.channel_override[link] = select_shift_channel(attacker, self.cfg.channel_count)

    def _handle_tx_done(self, tx):
        if self._measured():
            self.tally.optical_conversions += 2 * self.cfg.packet_flits
        self.live_tx.remove(tx)
        if tx.probe_link is not None:
            counts = self._shift_state.get(tx.probe_link)
            if counts is not None and tx.probe_channel in counts:
                entry = counts[tx.probe_channel]
                entry[1] += 1
                if tx.failed:
                    entry[0] += 1
                if tx.probe_link not in self.channel_override and all(
                    total >= _SHIFT_PROBES_PER_CHANNEL for _, total in counts.values()
                ):
                    self._finish_shift(tx.probe_link)
            return
        packet = tx.packet
        if tx.failed:
            packet.retransmissions += 1
            if self._measured():
                self.tally.retransmissions += 1
            self._retx_seq += 1
            heapq.heappush(
                self.retx_heap, (self.cycle + self.rtt, self._retx_seq, tx.hub, packet)
            )
            return
        packet.leg_index += 1
        receiver = self._leg_receiver(packet, tx.leg)
        if packet.leg_index < len(packet.plan.fabric_legs):
            self._enqueue_hub(receiver, packet)
        else:
            state = self.hubs[receiver]
            state.egress.append([packet, 0])
            self.egress_active.add(receiver)

    def _enqueue_hub(self, hub, packet):
        leg = packet.plan.fabric_legs[packet.leg_index]
        queues = self.hubs[hub].out_queues
        queue = queues.get(leg[0])
        if queue is None:
            queue = queues[leg[0]] = deque()
        queue.append(packet)
        self.queued_packets += 1

    def _start_tx(self, hub, leg, packet=None, probe_link=None, probe_channel=None):
        channel = probe_channel if probe_channel is not None else self._leg_channel(leg)
        occupancy = self.link_occupancy
        crossed = []
        failed = False
        for link in leg:
            ok = sample_transmission(self._q_of(link, channel), self.link_rng[link])
            crossed.append((link, not ok))
            if not ok:
                failed = True
                break
        end = self.cycle + len(crossed) * occupancy
        for i, (link, was_failed) in enumerate(crossed):
            exit_cycle = self.cycle + (i + 1) * occupancy
            self.busy_until[self.fabric.resource_of[link]] = exit_cycle
            self._schedule(exit_cycle, ("smp", link, was_failed))
        tx = _Transmission(packet, hub, leg, failed, end, probe_link, probe_channel)
        self.live_tx.append(tx)
        self._schedule(end, ("txd", tx))

    def _leg_startable(self, leg):
        c = self.cycle
        occupancy = self.link_occupancy
        resource_of = self.fabric.resource_of
        for i, link in enumerate(leg):
            if self.busy_until[resource_of[link]] > c + i * occupancy:
                return False
        return True

    def _phase_optical(self, optical_items):
        if optical_items:
            for item in optical_items:
                if item[0] == "smp":
                    self._record_sample(item[1], item[2])
                else:
                    self._handle_tx_done(item[1])
        if self.assembly_active:
            pending = sorted(self.assembly_active)
            self.assembly_active = set()
            p = self.cfg.packet_flits
            bound = self.cfg.hub_queue_packets
            for hub in pending:
                state = self.hubs[hub]
                while state.ingress:
                    packet, _ = state.ingress[0]
                    if state.ingress_counts.get(packet.pid, 0) < p:
                        break
                    leg = packet.plan.fabric_legs[packet.leg_index]
                    queue = state.out_queues.get(leg[0])
                    if queue is not None and len(queue) >= bound:
                        break  # bounded queue; woken when a transmission starts
                    for _ in range(p):
                        flit_packet, _seq = state.ingress.popleft()
                        if flit_packet is not packet:
                            raise SimulationError("interleaved flits inside hub ingress")
                    del state.ingress_counts[packet.pid]
                    attach = self.attach_of[hub]
                    self.out_credit[attach][HUB] += p
                    self.active.add(attach)
                    if self.source_queues[attach]:
                        self.inj_active.add(attach)
                    self._enqueue_hub(hub, packet)
        if self.next_probe:
            c = self.cycle
            for link in self.fabric.links:
                due = self.next_probe.get(link)
                if due is not None and due <= c:
                    self._probe_seq += 1
                    heapq.heappush(
                        self.pending_probes, (due, self._probe_seq, link, None, "pilot")
                    )
                    self.next_probe[link] = c + self.cfg.detector.probe_period
        if self.pending_probes and self.pending_probes[0][0] <= self.cycle:
            deferred = []
            while self.pending_probes and self.pending_probes[0][0] <= self.cycle:
                entry = heapq.heappop(self.pending_probes)
                _, seq, link, probe_channel, kind = entry
                if self._leg_startable((link,)):
                    channel = probe_channel
                    if channel is None:
                        channel = self._leg_channel((link,))
                    self._start_tx(None, (link,), probe_link=link, probe_channel=channel)
                else:
                    deferred.append((self.cycle + 1, seq, link, probe_channel, kind))
            for entry in deferred:
                heapq.heappush(self.pending_probes, entry)
        if self.queued_packets and self.cycle >= self.next_free_min:
            hub_count = len(self.hubs)
            started = True
            while started:
                started = False
                base = self.cycle % hub_count
                for offset in range(hub_count):
                    hub = (base + offset) % hub_count
                    state = self.hubs[hub]
                    if not state.out_queues:
                        continue
                    keys = sorted(state.out_queues)
                    for k in range(len(keys)):
                        key = keys[(state.queue_rr + k) % len(keys)]
                        queue = state.out_queues[key]
                        if not queue:
                            continue
                        packet = queue[0]
                        leg = packet.plan.fabric_legs[packet.leg_index]
                        if not self._leg_startable(leg):
                            continue
                        queue.popleft()
                        self.queued_packets -= 1
                        state.queue_rr = (state.queue_rr + k + 1) % len(keys)
                        self._start_tx(hub, leg, packet=packet)
                        self.assembly_active.add(hub)
                        started = True
                        break
            frees = [t for t in self.busy_until.values() if t > self.cycle]
            self.next_free_min = min(frees) if frees else self.cycle + 1

    # ------------------------------------------------------------- phase 4

    def _phase_retx(self):
        while self.retx_heap and self.retx_heap[0][0] <= self.cycle:
            _, _, hub, packet = heapq.heappop(self.retx_heap)
            self._enqueue_hub(hub, packet)

    # ---------------------------------------------------------------- loop

    def step(self):
        """Advance exactly one cycle through the fixed phase order."""
        self.cycle += 1
        self._phase_injection()
        optical_items = self._phase_electrical()
        self._phase_optical(optical_items)
        self._phase_retx()

    def _idle(self) -> bool:
        nxt = self.cycle + 1
        return not (
            self.active
            or self.inj_active
            or self.assembly_active
            or self.egress_active
            or (self.queued_packets and nxt >= self.next_free_min)
            or (self.pending_probes and self.pending_probes[0][0] <= nxt)
        )

    def _next_event_cycle(self):
        candidates = []
        if self.event_cycles:
            candidates.append(self.event_cycles[0])
        if self.retx_heap:
            candidates.append(self.retx_heap[0][0])
        if self.injection_enabled and self.inj_heap:
            candidates.append(self.inj_heap[0][0])
        if self.pending_probes:
            candidates.append(self.pending_probes[0][0])
        if self.next_probe:
            candidates.append(min(self.next_probe.values()))
        if self.queued_packets:
            candidates.append(self.next_free_min)
        return min(candidates) if candidates else None

    def _run_until(self, end_cycle):
        while self.cycle < end_cycle:
            if self._idle():
                target = self._next_event_cycle()
                if target is None or target > end_cycle:
                    self.cycle = end_cycle
                    return
                if target > self.cycle + 1:
                    self.cycle = target - 1
            self.step()

    def run(self) -> MetricsReport:
        cfg = self.cfg
        self._run_until(cfg.total_cycles)
        self.tally.measured_cycles = cfg.total_cycles - cfg.warmup_cycles
        if cfg.drain:
            self.injection_enabled = False
            limit = cfg.total_cycles * 4 + 200_000
            while self.cycle < limit and self.delivered < self.injected:
                if self._idle():
                    target = self._next_event_cycle()
                    if target is None:
                        break
                    if target > self.cycle + 1:
                        self.cycle = target - 1
                self.step()
            self.drained_empty = self.delivered == self.injected
        self.tally.injected_packets = self.injected
        self.tally.delivered_packets_total = self.delivered
        return finalize(
            self.tally, cfg.energy, alarms=self.alarms, config_hash=self.hash, seed=cfg.seed
        )

    # ------------------------------------------------------------- census

    def census(self):
        """Structural packet accounting for the conservation identity."""
        in_flight = set()
        for queue in self.source_queues:
            for packet, _ in queue:
                in_flight.add(packet.pid)
        for bufs in self.in_buf:
            for buf in bufs:
                for packet, _ in buf:
                    in_flight.add(packet.pid)
        for bucket in self.events.values():
            for item in bucket:
                if item[0] == "arr":
                    in_flight.add(item[3].pid)
                elif item[0] == "hubin":
                    in_flight.add(item[2].pid)
        for state in self.hubs:
            for packet, _ in state.ingress:
                in_flight.add(packet.pid)
            for queue in state.out_queues.values():
                for packet in queue:
                    in_flight.add(packet.pid)
            for packet, _ in state.egress:
                in_flight.add(packet.pid)
        for tx in self.live_tx:
            if tx.packet is not None:
                in_flight.add(tx.packet.pid)
        retained = {packet.pid for _, _, _, packet in self.retx_heap}
        delivered = {packet.pid for packet in self.delivered_log}
        in_flight -= retained
        in_flight -= delivered
        return {
            "injected": self.injected,
            "delivered": delivered,
            "in_flight": in_flight,
            "retained": retained,
        }


def _mesh_port(width, here, there):
    dx = (there % width) - (here % width)
    if dx == 1:
        return EAST
    if dx == -1:
        return WEST
    return SOUTH if there > here else NORTH


def run(config: NetworkConfig, resolved_tree=None) -> MetricsReport:
    """Simulate one configuration to completion."""
    return Engine(config, resolved_tree).run()
