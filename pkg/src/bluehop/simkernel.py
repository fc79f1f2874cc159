"""Deterministic discrete-event engine driving the whole simulation.

A single time-ordered queue carries motion updates, lifecycle changes,
protocol timers and packet arrivals. Time is an integer half-microsecond
counter, ties break by scheduling order, and every random quantity (hop
sequences, payload seals, synthetic payloads) derives from the scenario
seed through a named label, so two runs of the same (config, seed) produce
byte-identical traces.
"""
from __future__ import annotations

import hashlib
import heapq
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

from . import baseband, metrics, routing, scatternet, topology, transport
from .scatternet import LinkMode, Scatternet
from .scenario import ScenarioConfig
from .topology import Node, NodeState, Position, RadioClass

MOTION_CADENCE_HUS = 200_000  # 100 ms simulated
NEIGHBOR_MISS_BUDGET = 3      # advertisement periods before a silent peer expires


class CausalityError(ValueError):
    pass


class EventKind(Enum):
    MOTION_UPDATE = "motion_update"
    STATE_CHANGE = "state_change"
    ADVERTISEMENT_TIMER = "advertisement_timer"
    ACK_TIMER = "ack_timer"
    NEIGHBOR_EXPIRY = "neighbor_expiry"
    PACKET_ARRIVAL = "packet_arrival"
    SCENARIO_ACTION = "scenario_action"


@dataclass(frozen=True)
class Event:
    time: int
    sequence: int
    kind: EventKind
    payload: dict


class EventQueue:
    """Min-heap of events ordered by (time, scheduling sequence)."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._sequence = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, now: int, time: int, kind: EventKind, payload: dict) -> Event:
        if time < now:
            raise CausalityError(f"event at {time} scheduled from {now}")
        event = Event(time, self._sequence, kind, payload)
        self._sequence += 1
        heapq.heappush(self._heap, (time, event.sequence, event))
        return event

    def peek_time(self) -> int | None:
        return self._heap[0][0] if self._heap else None

    def pop(self) -> Event:
        return heapq.heappop(self._heap)[2]


@dataclass
class Frame:
    """One queued transmission: control, data fragment, or ack."""

    sender: int
    to: int
    ftype: str  # "adv" | "withdraw" | "disco" | "data" | "ack"
    ctrl: routing.ControlMessage | None = None
    pkt: transport.DataPacket | None = None
    ack: transport.Ack | None = None


@dataclass
class NodeRuntime:
    """Per-node protocol and radio state owned by the kernel."""

    table: routing.RoutingTable
    adv_cache: dict[int, dict[int, int]] = field(default_factory=dict)
    last_heard: dict[int, int] = field(default_factory=dict)
    discovery_seen: set[tuple[int, int]] = field(default_factory=set)
    txq: deque = field(default_factory=deque)
    busy_until: int = 0
    queued_advs: set[int] = field(default_factory=set)
    queue_depth: dict[int, int] = field(default_factory=dict)
    reassembly: dict[int, dict[int, bytes]] = field(default_factory=dict)
    pending: dict[int, transport.PendingTransfer] = field(default_factory=dict)


def derive_seed(scenario_seed: int, label: str) -> int:
    digest = hashlib.sha256(f"bluehop:{label}:{scenario_seed}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _t_us(t_hus: int):
    return t_hus // 2 if t_hus % 2 == 0 else t_hus / 2


class Engine:
    """One simulation run: world, protocol state, queue, metrics and trace."""

    def __init__(self, config: ScenarioConfig, seed: int):
        self.config = config
        self.seed = seed
        self.mode = config.link_mode
        self.inf = config.protocol.inf
        self.t_adv = config.protocol.t_adv_hus
        self.t_ack = config.protocol.t_ack_hus
        self.retries = config.protocol.retries
        self.bits_per_slot = baseband.BITS_PER_SLOT * config.rate_multiplier
        self.horizon = config.horizon_hus
        self.now = 0
        self.queue = EventQueue()
        self.trace: list[dict] = []
        self.metrics = metrics.Metrics()
        self.world: dict[int, Node] = {}
        self.net: Scatternet | None = None
        self.runtimes: dict[int, NodeRuntime] = {}
        self._links: dict[int, tuple[int, ...]] = {}
        self._hop_seqs: dict[int, baseband.HopSequence] = {}
        self._msg_counter = 0
        self._started = False
        self._has_motion = any(spec.waypoints for spec in config.nodes)
        # Engine-global message accounting so a reboot or a late packet can
        # never double-count an outcome.
        self._delivered_msgs: set[int] = set()
        self._failed_msgs: set[int] = set()
        for spec in config.nodes:
            node = Node(
                id=spec.id,
                position=Position(spec.x, spec.y),
                radio=RadioClass.for_class(spec.class_id, spec.range_m),
                state=spec.state,
                waypoints=[(t, Position(x, y)) for t, x, y in spec.waypoints],
            )
            self.world[spec.id] = node

    # ------------------------------------------------------------------ setup

    def _start(self) -> None:
        self._started = True
        topology.apply_motion(self.world, 0)
        self._rebuild_adjacency()
        if self.mode is LinkMode.SCATTERNET:
            self._form_scatternet()
            self._rebuild_adjacency()
        for n in sorted(self.world):
            if self.world[n].state is NodeState.ACTIVE:
                self._init_node_routing(n)
        if self._has_motion:
            t = MOTION_CADENCE_HUS
            while t <= self.horizon:
                self.queue.schedule(0, t, EventKind.MOTION_UPDATE, {})
                t += MOTION_CADENCE_HUS
        for n in sorted(self.world):
            t = self.t_adv
            while t <= self.horizon:
                self.queue.schedule(0, t, EventKind.ADVERTISEMENT_TIMER, {"node": n})
                t += self.t_adv
        for action in self.config.actions:
            self.queue.schedule(
                0, action.time_hus, EventKind.SCENARIO_ACTION, {"action": action}
            )
        for spec in self.config.traffic:
            for k in range(spec.count):
                self.queue.schedule(
                    0,
                    spec.time_hus + k * spec.interval_hus,
                    EventKind.SCENARIO_ACTION,
                    {"send": spec},
                )

    def run(self, until: int | None = None):
        """Advance the run to ``until`` (default: the horizon). Resumable."""
        if not self._started:
            self._start()
        limit = self.horizon if until is None else min(until, self.horizon)
        while self.queue and (t := self.queue.peek_time()) is not None and t <= limit:
            event = self.queue.pop()
            self.now = event.time
            self._dispatch(event)
        self.now = max(self.now, limit)
        return self.metrics, self.trace

    # ------------------------------------------------------------ trace/links

    def _emit(self, kind: str, node: int | None, detail: dict | None = None) -> None:
        record = {
            "t_us": _t_us(self.now),
            "seq": len(self.trace),
            "kind": kind,
            "node": node,
            "detail": detail or {},
        }
        self.trace.append(record)
        metrics.record_event(self.metrics, record)

    def _rebuild_adjacency(self) -> None:
        ids = sorted(self.world)
        self._links = {n: () for n in ids}
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                if scatternet.link_allowed(a, b, self.world, self.net, self.mode):
                    self._links[a] += (b,)
                    self._links[b] += (a,)

    def links(self, n: int) -> tuple[int, ...]:
        return self._links.get(n, ())

    def _form_scatternet(self) -> None:
        active = {
            n: node for n, node in self.world.items() if node.state is NodeState.ACTIVE
        }
        adjacency = {
            n: {m for m in active if m != n and topology.in_range(active[n], active[m])}
            for n in sorted(active)
        }
        self.net = scatternet.form_scatternet(adjacency, derive_seed(self.seed, "scatternet"))
        self._emit("scatternet", None, scatternet.scatternet_to_json(self.net))

    def _maybe_reform(self) -> None:
        """Rebuild the scatternet when churn broke a piconet or orphaned a node."""
        if self.mode is not LinkMode.SCATTERNET:
            return
        net = self.net
        broken = net is None
        if not broken:
            for pico in net.piconets:
                master = self.world[pico.master]
                if master.state is not NodeState.ACTIVE:
                    broken = True
                    break
                for member in pico.active_slaves + pico.parked_slaves:
                    node = self.world[member]
                    if node.state is NodeState.ACTIVE and not topology.in_range(master, node):
                        broken = True
                        break
                if broken:
                    break
        if not broken:
            for n, node in self.world.items():
                if node.state is NodeState.ACTIVE and not net.roles_of(n):
                    broken = True
                    break
        if broken:
            self._form_scatternet()
            self._rebuild_adjacency()

    def _hop_sequence(self, master: int) -> baseband.HopSequence:
        if master not in self._hop_seqs:
            self._hop_seqs[master] = baseband.HopSequence(
                seed=derive_seed(self.seed, f"hop:{master}")
            )
        return self._hop_seqs[master]

    # -------------------------------------------------------------- protocol

    def _init_node_routing(self, n: int) -> None:
        neighbors = self.links(n)
        self.runtimes[n] = NodeRuntime(
            table=routing.init_routing(n, neighbors, self.now, self.inf)
        )
        rt = self.runtimes[n]
        for m in neighbors:
            rt.last_heard[m] = self.now
            self._arm_expiry(n, m)
            self._enqueue_adv(n, m)

    def _arm_expiry(self, n: int, neighbor: int) -> None:
        self.queue.schedule(
            self.now,
            self.now + NEIGHBOR_MISS_BUDGET * self.t_adv,
            EventKind.NEIGHBOR_EXPIRY,
            {"node": n, "neighbor": neighbor},
        )

    def _enqueue_adv(self, n: int, to: int) -> None:
        if to in self.runtimes[n].queued_advs:
            return  # one queued advertisement per neighbour; content built at send
        self.runtimes[n].queued_advs.add(to)
        self._enqueue_frame(Frame(sender=n, to=to, ftype="adv"))

    def _broadcast_advs(self, n: int) -> None:
        for m in self.links(n):
            self._enqueue_adv(n, m)

    def _enqueue_frame(self, frame: Frame) -> None:
        rt = self.runtimes[frame.sender]
        rt.txq.append(frame)
        rt.queue_depth[frame.to] = rt.queue_depth.get(frame.to, 0) + 1
        self._try_service(frame.sender)

    def _route_candidates(self, n: int, dest: int) -> list[tuple[int, int]]:
        """Minimal-cost next hops toward ``dest`` with their queue depths."""
        rt = self.runtimes[n]
        entry = rt.table.entries.get(dest)
        if entry is None or entry.cost >= self.inf:
            return []
        links = self.links(n)
        cands = [
            m
            for m in links
            if m in rt.adv_cache
            and min(rt.adv_cache[m].get(dest, self.inf), self.inf) + 1 == entry.cost
        ]
        if not cands and entry.next_hop in links:
            cands = [entry.next_hop]
        return [(m, rt.queue_depth.get(m, 0)) for m in cands]

    def _trigger_discovery(self, n: int, target: int) -> None:
        rt = self.runtimes[n]
        self._emit("discovery", n, {"target": target})
        rt.discovery_seen.add((n, target))
        for to, msg in routing.trigger_discovery(n, target, self.links(n), self.inf):
            self._enqueue_frame(Frame(sender=n, to=to, ftype="disco", ctrl=msg))

    # ----------------------------------------------------------------- radio

    def _try_service(self, n: int) -> None:
        """Start the next queued transmission if the radio is free."""
        rt = self.runtimes[n]
        while rt.txq and rt.busy_until <= self.now:
            frame = rt.txq.popleft()
            rt.queue_depth[frame.to] = rt.queue_depth.get(frame.to, 1) - 1
            if frame.ftype == "adv":
                # Content is built at transmission time so a queued triggered
                # advertisement always carries the latest table.
                rt.queued_advs.discard(frame.to)
                frame.ctrl = routing.make_advertisement(rt.table, frame.to)
            if self.world[n].state is not NodeState.ACTIVE:
                self._emit(
                    "packet_lost",
                    n,
                    {"to": frame.to, "ftype": frame.ftype, "where": "sender_inactive"},
                )
                continue
            parity = None
            channel = None
            if self.mode is LinkMode.SCATTERNET:
                link = self.net.link_piconet(n, frame.to) if self.net else None
                if link is None:
                    self._emit(
                        "packet_lost",
                        n,
                        {"to": frame.to, "ftype": frame.ftype, "where": "no_slot_grant"},
                    )
                    continue
                pid, parity = link
                master = self.net.piconets[pid].master
                start = baseband.next_tx_start_hus(max(self.now, rt.busy_until), parity)
                channel = baseband.hop_channel(
                    self._hop_sequence(master), start // baseband.SLOT_HUS
                )
            else:
                start = max(self.now, rt.busy_until)
            slots = frame.pkt.slot_class.slots if frame.ftype == "data" else 1
            rt.busy_until = start + baseband.tx_duration_hus(slots)
            self._trace_transmission(frame, slots, channel)
            self.queue.schedule(
                self.now, rt.busy_until, EventKind.PACKET_ARRIVAL, {"frame": frame}
            )
            return

    def _trace_transmission(self, frame: Frame, slots: int, channel: int | None) -> None:
        if frame.ftype == "data":
            detail = {
                "to": frame.to,
                "msg_id": frame.pkt.msg_id,
                "fragment": frame.pkt.fragment_index,
                "slots": slots,
            }
            if channel is not None:
                detail["channel"] = channel
            self._emit("data_tx", frame.sender, detail)
        elif frame.ftype == "ack":
            detail = {"to": frame.to, "msg_id": frame.ack.msg_id}
            if channel is not None:
                detail["channel"] = channel
            self._emit("ack_tx", frame.sender, detail)
        else:
            ctrl_name = {
                "adv": "advertisement",
                "withdraw": "withdraw",
                "disco": "discovery_request",
            }[frame.ftype]
            detail = {"to": frame.to, "ctrl": ctrl_name}
            if channel is not None:
                detail["channel"] = channel
            self._emit("ctrl_sent", frame.sender, detail)

    # -------------------------------------------------------------- dispatch

    def _dispatch(self, event: Event) -> None:
        kind = event.kind
        p = event.payload
        if kind is EventKind.PACKET_ARRIVAL:
            self._on_arrival(p["frame"])
        elif kind is EventKind.ADVERTISEMENT_TIMER:
            self._on_adv_timer(p["node"])
        elif kind is EventKind.ACK_TIMER:
            self._on_ack_timer(p["node"], p["msg_id"], p["deadline"])
        elif kind is EventKind.NEIGHBOR_EXPIRY:
            self._on_neighbor_expiry(p["node"], p["neighbor"])
        elif kind is EventKind.MOTION_UPDATE:
            self._on_motion()
        elif kind is EventKind.SCENARIO_ACTION:
            if "send" in p:
                spec = p["send"]
                self._send_message(spec.src, spec.dst, spec.payload_bytes)
            else:
                self._on_action(p["action"])
        elif kind is EventKind.STATE_CHANGE:
            self._apply_state(p["node"], p["state"])

    def _on_motion(self) -> None:
        topology.apply_motion(self.world, self.now)
        self._emit("motion", None, {})
        self._maybe_reform()
        self._rebuild_adjacency()

    def _on_adv_timer(self, n: int) -> None:
        if self.world[n].state is not NodeState.ACTIVE or n not in self.runtimes:
            return
        self._emit("adv_timer", n, {})
        self._broadcast_advs(n)

    def _on_neighbor_expiry(self, n: int, neighbor: int) -> None:
        rt = self.runtimes.get(n)
        if rt is None or self.world[n].state is not NodeState.ACTIVE:
            return
        heard = rt.last_heard.get(neighbor)
        if heard is None or heard + NEIGHBOR_MISS_BUDGET * self.t_adv > self.now:
            return  # refreshed since this check was armed
        # A silent neighbour is treated exactly like a withdraw from it.
        rt.last_heard.pop(neighbor, None)
        rt.adv_cache.pop(neighbor, None)
        self._emit("neighbor_expiry", n, {"neighbor": neighbor})
        if routing.handle_withdraw(rt.table, neighbor, self.now):
            self._broadcast_advs(n)

    def _on_action(self, action) -> None:
        if action.action == "withdraw":
            self._on_withdraw_action(action.node)
        else:
            self._apply_state(action.node, action.state)

    def _on_withdraw_action(self, n: int) -> None:
        """Voluntary departure: farewell to the neighbours, then power off."""
        neighbors = self.links(n)
        self._emit("withdraw_action", n, {"neighbors": list(neighbors)})
        msg = routing.ControlMessage(routing.MessageKind.WITHDRAW, origin=n)
        for m in neighbors:
            self._emit("ctrl_sent", n, {"to": m, "ctrl": "withdraw"})
            self.queue.schedule(
                self.now,
                self.now + baseband.SLOT_HUS,
                EventKind.PACKET_ARRIVAL,
                {"frame": Frame(sender=n, to=m, ftype="withdraw", ctrl=msg)},
            )
        self._apply_state(n, NodeState.OFF)

    def _apply_state(self, n: int, state: NodeState) -> None:
        node = self.world[n]
        was_active = node.state is NodeState.ACTIVE
        topology.set_node_state(self.world, n, state)
        self._emit("state_change", n, {"state": state.value})
        self._rebuild_adjacency()
        self._maybe_reform()
        if state is NodeState.ACTIVE and not was_active:
            # A node that rejoins finds its immediate neighbours afresh.
            self._init_node_routing(n)

    # ------------------------------------------------------------- transport

    def _send_message(self, src: int, dst: int, nbytes: int) -> None:
        msg_id = self._msg_counter
        self._msg_counter += 1
        if (
            src not in self.world
            or dst not in self.world
            or self.world[src].state is not NodeState.ACTIVE
        ):
            self._emit(
                "msg_rejected",
                src,
                {"msg_id": msg_id, "dst": dst, "bytes": nbytes, "reason": "src not active"},
            )
            return
        plaintext = transport.make_payload(self.seed, msg_id, nbytes)
        sealed = transport.seal_payload(plaintext, src, dst, self.seed)
        pieces = transport.fragment_sealed(sealed, self.bits_per_slot)
        self._emit(
            "msg_send",
            src,
            {
                "msg_id": msg_id,
                "dst": dst,
                "bytes": nbytes,
                "fragments": len(pieces),
                "plaintext": plaintext.hex(),
            },
        )
        pending = transport.PendingTransfer(
            msg_id=msg_id,
            src=src,
            dst=dst,
            plaintext=plaintext,
            fragments=list(enumerate(pieces)),
            deadline=self.now + self.t_ack,
            sent_at=self.now,
            retries_left=self.retries,
        )
        self.runtimes[src].pending[msg_id] = pending
        first = transport.choose_first_hop(
            self._route_candidates(src, dst), pending.routes_tried
        )
        if first is None:
            self._trigger_discovery(src, dst)
        else:
            pending.routes_tried.add(first)
            self._transmit_fragments(pending, first)
        self.queue.schedule(
            self.now,
            pending.deadline,
            EventKind.ACK_TIMER,
            {"node": src, "msg_id": msg_id, "deadline": pending.deadline},
        )

    def _transmit_fragments(self, pending: transport.PendingTransfer, first: int) -> None:
        for index, piece in pending.fragments:
            pkt = transport.DataPacket(
                msg_id=pending.msg_id,
                src=pending.src,
                dst=pending.dst,
                fragment_index=index,
                fragment_count=len(pending.fragments),
                sealed_payload=piece,
                slot_class=baseband.slots_for_payload(len(piece) * 8, self.bits_per_slot),
            )
            self._enqueue_frame(Frame(sender=pending.src, to=first, ftype="data", pkt=pkt))

    def _on_ack_timer(self, src: int, msg_id: int, deadline: int) -> None:
        rt = self.runtimes.get(src)
        if rt is None:
            return
        pending = rt.pending.get(msg_id)
        if pending is None or pending.deadline != deadline:
            return  # acked or re-armed since this timer was set
        self._emit(
            "ack_timeout", src, {"msg_id": msg_id, "retries_left": pending.retries_left}
        )
        if msg_id in self._delivered_msgs:
            # Delivered but the ack never made it back; the transfer is done.
            del rt.pending[msg_id]
            return
        if pending.retries_left <= 0:
            del rt.pending[msg_id]
            self._failed_msgs.add(msg_id)
            cls = pending.last_drop_class or "retry-exhausted"
            self._emit(
                "msg_failed",
                src,
                {"msg_id": msg_id, "class": cls, "retries": pending.retransmissions},
            )
            return
        pending.retries_left -= 1
        pending.retransmissions += 1
        if self.world[src].state is NodeState.ACTIVE:
            self._trigger_discovery(src, pending.dst)
            first = transport.choose_first_hop(
                self._route_candidates(src, pending.dst), pending.routes_tried
            )
            if first is not None:
                pending.routes_tried.add(first)
                self._transmit_fragments(pending, first)
        pending.deadline = self.now + self.t_ack
        self.queue.schedule(
            self.now,
            pending.deadline,
            EventKind.ACK_TIMER,
            {"node": src, "msg_id": msg_id, "deadline": pending.deadline},
        )

    # --------------------------------------------------------------- arrival

    def _on_arrival(self, frame: Frame) -> None:
        self._try_service(frame.sender)
        n = frame.to
        if self.world[n].state is not NodeState.ACTIVE or n not in self.runtimes:
            self._emit(
                "packet_lost",
                n,
                {"from": frame.sender, "ftype": frame.ftype, "where": "receiver_inactive"},
            )
            return
        if frame.ftype == "withdraw":
            # The sender is already gone; the farewell is honoured regardless.
            self._on_ctrl_withdraw(n, frame.sender)
            return
        linked = frame.sender in self.links(n)
        if frame.ftype in ("adv", "disco"):
            if not linked:
                self._emit(
                    "stale_ctrl",
                    n,
                    {"from": frame.sender, "ctrl": "advertisement" if frame.ftype == "adv" else "discovery_request"},
                )
                return
            if frame.ftype == "adv":
                self._on_ctrl_adv(n, frame.sender, frame.ctrl)
            else:
                self._on_ctrl_disco(n, frame.sender, frame.ctrl)
            return
        if not linked:
            self._emit(
                "packet_lost",
                n,
                {"from": frame.sender, "ftype": frame.ftype, "where": "link_down"},
            )
            return
        if frame.ftype == "data":
            self._on_data(n, frame.sender, frame.pkt)
        elif frame.ftype == "ack":
            self._on_ack(n, frame.sender, frame.ack)

    def _refresh_neighbor(self, n: int, sender: int) -> None:
        rt = self.runtimes[n]
        rt.last_heard[sender] = self.now
        self._arm_expiry(n, sender)

    def _on_ctrl_adv(self, n: int, sender: int, adv: routing.ControlMessage) -> None:
        rt = self.runtimes[n]
        self._emit("ctrl_rx", n, {"from": sender, "ctrl": "advertisement"})
        self._refresh_neighbor(n, sender)
        rt.adv_cache[sender] = dict(adv.entries)
        if routing.process_advertisement(rt.table, sender, adv, self.now):
            self._broadcast_advs(n)

    def _on_ctrl_withdraw(self, n: int, sender: int) -> None:
        rt = self.runtimes[n]
        self._emit("ctrl_rx", n, {"from": sender, "ctrl": "withdraw"})
        rt.last_heard.pop(sender, None)
        rt.adv_cache.pop(sender, None)
        if routing.handle_withdraw(rt.table, sender, self.now):
            self._broadcast_advs(n)

    def _on_ctrl_disco(self, n: int, sender: int, msg: routing.ControlMessage) -> None:
        rt = self.runtimes[n]
        self._emit(
            "ctrl_rx",
            n,
            {"from": sender, "ctrl": "discovery_request", "target": msg.target},
        )
        self._refresh_neighbor(n, sender)
        # Every receiver answers with a full advertisement toward the asker.
        self._enqueue_adv(n, sender)
        key = (msg.origin, msg.target)
        if key in rt.discovery_seen or msg.ttl <= 1 or n == msg.target:
            return
        rt.discovery_seen.add(key)
        fwd = routing.ControlMessage(
            routing.MessageKind.DISCOVERY_REQUEST,
            origin=msg.origin,
            target=msg.target,
            ttl=msg.ttl - 1,
        )
        for m in self.links(n):
            if m != sender:
                self._enqueue_frame(Frame(sender=n, to=m, ftype="disco", ctrl=fwd))

    def _note_drop(self, pkt: transport.DataPacket, cls: str) -> None:
        sender_rt = self.runtimes.get(pkt.src)
        pending = sender_rt.pending.get(pkt.msg_id) if sender_rt else None
        if pending is not None:
            pending.last_drop_class = cls

    def _on_data(self, n: int, sender: int, pkt: transport.DataPacket) -> None:
        rt = self.runtimes[n]
        pkt.hop_trace.append(n)
        self._emit(
            "data_rx",
            n,
            {
                "from": sender,
                "msg_id": pkt.msg_id,
                "fragment": pkt.fragment_index,
                "payload": pkt.sealed_payload.hex(),
                "hop_trace": list(pkt.hop_trace),
            },
        )
        if n == pkt.dst:
            self._deliver_fragment(n, pkt)
            return
        if len(pkt.hop_trace) > self.inf:
            self._emit(
                "drop",
                n,
                {"msg_id": pkt.msg_id, "fragment": pkt.fragment_index, "class": "ttl-drop"},
            )
            self._note_drop(pkt, "ttl-drop")
            return
        chosen = routing.select_next_hop(self._route_candidates(n, pkt.dst))
        if chosen is None:
            self._emit(
                "drop",
                n,
                {
                    "msg_id": pkt.msg_id,
                    "fragment": pkt.fragment_index,
                    "class": "forward-failure",
                },
            )
            self._note_drop(pkt, "forward-failure")
            return
        self._enqueue_frame(Frame(sender=n, to=chosen, ftype="data", pkt=pkt))

    def _deliver_fragment(self, n: int, pkt: transport.DataPacket) -> None:
        rt = self.runtimes[n]
        if pkt.msg_id in self._delivered_msgs:
            self._send_ack(n, pkt)  # the earlier ack may have been lost
            return
        frags = rt.reassembly.setdefault(pkt.msg_id, {})
        if pkt.fragment_index in frags:
            return  # duplicate fragment, at-most-once delivery
        frags[pkt.fragment_index] = pkt.sealed_payload
        if len(frags) < pkt.fragment_count:
            return
        sealed = b"".join(frags[i] for i in range(pkt.fragment_count))
        plaintext = transport.open_payload_at(n, sealed, pkt.src, pkt.dst, self.seed)
        self._delivered_msgs.add(pkt.msg_id)
        del rt.reassembly[pkt.msg_id]
        if pkt.msg_id in self._failed_msgs:
            # The sender already gave up on this message; keep the outcome
            # partition intact and only note the late arrival.
            self._emit("late_delivery", n, {"msg_id": pkt.msg_id})
            return
        sender_rt = self.runtimes.get(pkt.src)
        pending = sender_rt.pending.get(pkt.msg_id) if sender_rt else None
        retries = pending.retransmissions if pending else 0
        latency = _t_us(self.now - pending.sent_at) if pending else None
        self._emit(
            "delivery",
            n,
            {
                "msg_id": pkt.msg_id,
                "src": pkt.src,
                "bytes": len(plaintext),
                "hops": len(pkt.hop_trace) - 1,
                "latency_us": latency,
                "retries": retries,
                "plaintext": plaintext.hex(),
            },
        )
        self._send_ack(n, pkt)

    def _send_ack(self, n: int, pkt: transport.DataPacket) -> None:
        ack = transport.Ack(msg_id=pkt.msg_id, src=n, dst=pkt.src)
        chosen = routing.select_next_hop(self._route_candidates(n, pkt.src))
        if chosen is None:
            self._emit(
                "drop", n, {"msg_id": pkt.msg_id, "fragment": -1, "class": "forward-failure"}
            )
            return
        self._enqueue_frame(Frame(sender=n, to=chosen, ftype="ack", ack=ack))

    def _on_ack(self, n: int, sender: int, ack: transport.Ack) -> None:
        rt = self.runtimes[n]
        if n == ack.dst:
            self._emit("ack_rx", n, {"msg_id": ack.msg_id, "from": sender})
            rt.pending.pop(ack.msg_id, None)
            return
        ack.hops += 1
        if ack.hops > self.inf:
            self._emit("drop", n, {"msg_id": ack.msg_id, "fragment": -1, "class": "ttl-drop"})
            return
        chosen = routing.select_next_hop(self._route_candidates(n, ack.dst))
        if chosen is None:
            self._emit(
                "drop", n, {"msg_id": ack.msg_id, "fragment": -1, "class": "forward-failure"}
            )
            return
        self._enqueue_frame(Frame(sender=n, to=chosen, ftype="ack", ack=ack))

    # ----------------------------------------------------------------- dumps

    def routing_tables_json(self) -> list[dict]:
        dumps = []
        for n in sorted(self.runtimes):
            table = self.runtimes[n].table
            dumps.append(
                {
                    "node": n,
                    "time": _t_us(self.now),
                    "entries": [
                        {
                            "dest": d,
                            "next_hop": table.entries[d].next_hop,
                            "cost": table.entries[d].cost,
                        }
                        for d in sorted(table.entries)
                    ],
                }
            )
        return dumps

    def topo_json(self) -> dict:
        out = {
            "adjacency": {
                str(n): list(self.links(n)) for n in sorted(self.world)
            }
        }
        if self.mode is LinkMode.SCATTERNET and self.net is not None:
            out["scatternet"] = scatternet.scatternet_to_json(self.net)
        return out


def run_scenario(config: ScenarioConfig, seed: int) -> tuple[metrics.Metrics, list[dict]]:
    """Execute a validated scenario to its horizon."""
    engine = Engine(config, seed)
    return engine.run()
