"""Scenario files: schema, exhaustive validation, and loading.

A scenario is a JSON object describing nodes (placement, class, state,
waypoints), the link mode, protocol knobs, scripted traffic and state
actions, and the simulation horizon. Validation is total: a file either
yields a config or the complete list of diagnostics, never a partial run.
Times in the file are seconds; internally everything becomes integer
half-microseconds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import routing
from .scatternet import LinkMode
from .topology import CLASS_RANGE_BANDS, MAX_NODES, NODE_ID_MAX, NodeState

HUS_PER_SECOND = 2_000_000

_NODE_FIELDS = {"id", "x", "y", "class", "range", "state", "waypoints"}
_TRAFFIC_FIELDS = {"time", "src", "dst", "payload_bytes", "count", "interval"}
_ACTION_FIELDS = {"time", "node", "action", "state"}
_PROTOCOL_FIELDS = {"t_adv", "t_ack", "retries", "inf"}
_TOP_FIELDS = {
    "nodes",
    "link_mode",
    "protocol",
    "traffic",
    "actions",
    "horizon",
    "rate_multiplier",
}

DEFAULT_T_ADV_S = 1.0
DEFAULT_T_ACK_S = 0.1
DEFAULT_RETRIES = 3


class ScenarioError(ValueError):
    """Carries every validation diagnostic found in a scenario file."""

    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("; ".join(errors))


def sec_to_hus(seconds: float) -> int:
    return round(seconds * HUS_PER_SECOND)


@dataclass(frozen=True)
class NodeSpec:
    id: int
    x: float
    y: float
    class_id: int
    range_m: float | None = None
    state: NodeState = NodeState.ACTIVE
    waypoints: tuple[tuple[int, float, float], ...] = ()


@dataclass(frozen=True)
class TrafficSpec:
    time_hus: int
    src: int
    dst: int
    payload_bytes: int
    count: int = 1
    interval_hus: int = 0


@dataclass(frozen=True)
class ActionSpec:
    time_hus: int
    node: int
    action: str  # "set_state" or "withdraw"
    state: NodeState | None = None


@dataclass
class ProtocolParams:
    t_adv_hus: int = sec_to_hus(DEFAULT_T_ADV_S)
    t_ack_hus: int = sec_to_hus(DEFAULT_T_ACK_S)
    retries: int = DEFAULT_RETRIES
    inf: int = routing.INF


@dataclass
class ScenarioConfig:
    nodes: list[NodeSpec]
    horizon_hus: int
    link_mode: LinkMode = LinkMode.GEOMETRIC
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    traffic: list[TrafficSpec] = field(default_factory=list)
    actions: list[ActionSpec] = field(default_factory=list)
    rate_multiplier: int = 1


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_scenario(data) -> ScenarioConfig:
    """Validate a parsed JSON object, collecting every error before failing."""
    errors: list[str] = []

    def err(path: str, message: str) -> None:
        errors.append(f"{path}: {message}")

    if not isinstance(data, dict):
        raise ScenarioError(["scenario: expected a JSON object"])

    for key in sorted(set(data) - _TOP_FIELDS):
        err(key, "unknown field")

    horizon_hus = 0
    horizon = data.get("horizon")
    if horizon is None:
        err("horizon", "required field missing")
    elif not _is_num(horizon) or horizon <= 0:
        err("horizon", "expected a positive number of seconds")
    else:
        horizon_hus = sec_to_hus(horizon)

    link_mode = LinkMode.GEOMETRIC
    mode_raw = data.get("link_mode", "geometric")
    if mode_raw not in ("geometric", "scatternet"):
        err("link_mode", f"expected 'geometric' or 'scatternet', got {mode_raw!r}")
    else:
        link_mode = LinkMode(mode_raw)

    rate_multiplier = data.get("rate_multiplier", 1)
    if not _is_int(rate_multiplier) or rate_multiplier < 1:
        err("rate_multiplier", "expected a positive integer")
        rate_multiplier = 1

    protocol = ProtocolParams()
    proto_raw = data.get("protocol", {})
    if not isinstance(proto_raw, dict):
        err("protocol", "expected an object")
    else:
        for key in sorted(set(proto_raw) - _PROTOCOL_FIELDS):
            err(f"protocol.{key}", "unknown field")
        t_adv = proto_raw.get("t_adv", DEFAULT_T_ADV_S)
        t_ack = proto_raw.get("t_ack", DEFAULT_T_ACK_S)
        retries = proto_raw.get("retries", DEFAULT_RETRIES)
        inf = proto_raw.get("inf", routing.INF)
        if not _is_num(t_adv) or t_adv <= 0:
            err("protocol.t_adv", "expected a positive number of seconds")
        if not _is_num(t_ack) or t_ack <= 0:
            err("protocol.t_ack", "expected a positive number of seconds")
        if not _is_int(retries) or retries < 0:
            err("protocol.retries", "expected a non-negative integer")
        if not _is_int(inf) or inf < 2:
            err("protocol.inf", "expected an integer cost cap >= 2")
        if not errors:
            protocol = ProtocolParams(sec_to_hus(t_adv), sec_to_hus(t_ack), retries, inf)

    nodes: list[NodeSpec] = []
    seen_ids: set[int] = set()
    nodes_raw = data.get("nodes")
    if not isinstance(nodes_raw, list):
        err("nodes", "required list missing")
        nodes_raw = []
    if len(nodes_raw) > MAX_NODES:
        err("nodes", f"{len(nodes_raw)} nodes exceeds the {MAX_NODES}-node limit")
    for i, raw in enumerate(nodes_raw):
        path = f"nodes[{i}]"
        if not isinstance(raw, dict):
            err(path, "expected an object")
            continue
        for key in sorted(set(raw) - _NODE_FIELDS):
            err(f"{path}.{key}", "unknown field")
        nid = raw.get("id")
        if not _is_int(nid) or not (0 <= nid <= NODE_ID_MAX):
            err(f"{path}.id", f"expected an integer in [0, {NODE_ID_MAX}]")
            nid = None
        elif nid in seen_ids:
            err(f"{path}.id", f"duplicate node id {nid}")
            nid = None
        else:
            seen_ids.add(nid)
        x, y = raw.get("x"), raw.get("y")
        if not _is_num(x):
            err(f"{path}.x", "expected a number (metres)")
        if not _is_num(y):
            err(f"{path}.y", "expected a number (metres)")
        class_id = raw.get("class")
        if class_id not in (1, 2, 3):
            err(f"{path}.class", "expected device class 1, 2 or 3")
        range_m = raw.get("range")
        if range_m is not None:
            if not _is_num(range_m):
                err(f"{path}.range", "expected a number (metres)")
            elif class_id in (1, 2, 3):
                lo, hi = CLASS_RANGE_BANDS[class_id]
                if not (lo <= range_m <= hi):
                    err(f"{path}.range", f"class {class_id} range must lie in [{lo}, {hi}] m")
        state_raw = raw.get("state", "active")
        state = None
        try:
            state = NodeState(state_raw)
        except ValueError:
            err(f"{path}.state", f"unknown state {state_raw!r}")
        waypoints: list[tuple[int, float, float]] = []
        wps_raw = raw.get("waypoints", [])
        if not isinstance(wps_raw, list):
            err(f"{path}.waypoints", "expected a list of [time, x, y]")
            wps_raw = []
        last_t = None
        for j, wp in enumerate(wps_raw):
            wpath = f"{path}.waypoints[{j}]"
            if (
                not isinstance(wp, list)
                or len(wp) != 3
                or not all(_is_num(v) for v in wp)
            ):
                err(wpath, "expected [time_s, x, y]")
                continue
            t, wx, wy = wp
            if t < 0:
                err(wpath, "waypoint time must be non-negative")
            elif last_t is not None and t <= last_t:
                err(wpath, "waypoint times must be strictly increasing")
            last_t = t
            waypoints.append((sec_to_hus(t), float(wx), float(wy)))
        if nid is not None and not errors:
            nodes.append(
                NodeSpec(
                    id=nid,
                    x=float(x),
                    y=float(y),
                    class_id=class_id,
                    range_m=float(range_m) if range_m is not None else None,
                    state=state,
                    waypoints=tuple(waypoints),
                )
            )

    def check_ref(path: str, nid, label: str) -> bool:
        if not _is_int(nid):
            err(path, f"expected an integer node id for {label}")
            return False
        if nid not in seen_ids:
            err(path, f"{label} references nonexistent node id {nid}")
            return False
        return True

    def check_time(path: str, t) -> int | None:
        if not _is_num(t) or t < 0:
            err(path, "expected a non-negative number of seconds")
            return None
        t_hus = sec_to_hus(t)
        if horizon_hus and t_hus > horizon_hus:
            err(path, f"time {t} s lies beyond the horizon")
            return None
        return t_hus

    traffic: list[TrafficSpec] = []
    traffic_raw = data.get("traffic", [])
    if not isinstance(traffic_raw, list):
        err("traffic", "expected a list")
        traffic_raw = []
    for i, raw in enumerate(traffic_raw):
        path = f"traffic[{i}]"
        if not isinstance(raw, dict):
            err(path, "expected an object")
            continue
        for key in sorted(set(raw) - _TRAFFIC_FIELDS):
            err(f"{path}.{key}", "unknown field")
        t_hus = check_time(f"{path}.time", raw.get("time"))
        ok = check_ref(f"{path}.src", raw.get("src"), "src")
        ok &= check_ref(f"{path}.dst", raw.get("dst"), "dst")
        if ok and raw.get("src") == raw.get("dst"):
            err(f"{path}.dst", "src and dst must differ")
            ok = False
        nbytes = raw.get("payload_bytes")
        if not _is_int(nbytes) or nbytes < 0:
            err(f"{path}.payload_bytes", "expected a non-negative integer byte count")
            ok = False
        count = raw.get("count", 1)
        if not _is_int(count) or count < 1:
            err(f"{path}.count", "expected a positive integer")
            ok = False
        interval = raw.get("interval", 0)
        if not _is_num(interval) or interval < 0:
            err(f"{path}.interval", "expected a non-negative number of seconds")
            ok = False
        if ok and t_hus is not None:
            traffic.append(
                TrafficSpec(t_hus, raw["src"], raw["dst"], nbytes, count, sec_to_hus(interval))
            )

    actions: list[ActionSpec] = []
    actions_raw = data.get("actions", [])
    if not isinstance(actions_raw, list):
        err("actions", "expected a list")
        actions_raw = []
    for i, raw in enumerate(actions_raw):
        path = f"actions[{i}]"
        if not isinstance(raw, dict):
            err(path, "expected an object")
            continue
        for key in sorted(set(raw) - _ACTION_FIELDS):
            err(f"{path}.{key}", "unknown field")
        t_hus = check_time(f"{path}.time", raw.get("time"))
        ok = check_ref(f"{path}.node", raw.get("node"), "node")
        kind = raw.get("action")
        state = None
        if kind == "set_state":
            try:
                state = NodeState(raw.get("state"))
            except ValueError:
                err(f"{path}.state", f"unknown state {raw.get('state')!r}")
                ok = False
        elif kind == "withdraw":
            if "state" in raw:
                err(f"{path}.state", "withdraw takes no state")
                ok = False
        else:
            err(f"{path}.action", "expected 'set_state' or 'withdraw'")
            ok = False
        if ok and t_hus is not None:
            actions.append(ActionSpec(t_hus, raw["node"], kind, state))

    if errors:
        raise ScenarioError(errors)
    return ScenarioConfig(
        nodes=nodes,
        horizon_hus=horizon_hus,
        link_mode=link_mode,
        protocol=protocol,
        traffic=traffic,
        actions=actions,
        rate_multiplier=rate_multiplier,
    )


def parse_scenario(path: str) -> ScenarioConfig:
    """Load and validate a scenario file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError([f"{path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"{path}: malformed JSON: {exc}"]) from exc
    return validate_scenario(data)
