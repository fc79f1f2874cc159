"""Modified distance-vector routing for churning short-range networks.

Each node keeps a table of (destination, next hop, hop cost) entries seeded
from its immediate neighbours, exchanges its full vector with neighbours on
a regular basis, and relaxes costs Bellman-Ford style. Split horizon with
poisoned reverse plus a hard cost cap keep count-to-infinity bounded, a
withdraw message lets a node leave politely, and an on-demand discovery
flood solicits ordinary advertisements when a sender lacks a route.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

INF = 16  # cost cap; entries at INF are unreachable


class MessageKind(Enum):
    ADVERTISEMENT = "advertisement"
    WITHDRAW = "withdraw"
    DISCOVERY_REQUEST = "discovery_request"


@dataclass(frozen=True)
class ControlMessage:
    kind: MessageKind
    origin: int
    # Advertisement payload: (destination, cost) pairs sorted by destination.
    entries: tuple[tuple[int, int], ...] = ()
    # Discovery payload.
    target: int | None = None
    ttl: int = 0


@dataclass
class RouteEntry:
    destination: int
    next_hop: int | None
    cost: int
    last_updated: int = 0


@dataclass
class RoutingTable:
    owner: int
    inf: int = INF
    entries: dict[int, RouteEntry] = field(default_factory=dict)

    def cost_to(self, dest: int) -> int:
        e = self.entries.get(dest)
        return e.cost if e is not None else self.inf


def init_routing(n: int, neighbors: Iterable[int], now: int = 0, inf: int = INF) -> RoutingTable:
    """Fresh table for a node that just started: itself plus each neighbour at cost 1."""
    table = RoutingTable(owner=n, inf=inf)
    table.entries[n] = RouteEntry(n, n, 0, now)
    for m in sorted(neighbors):
        if m == n:
            continue
        table.entries[m] = RouteEntry(m, m, 1, now)
    return table


def make_advertisement(table: RoutingTable, to_neighbor: int) -> ControlMessage:
    """Full-table advertisement for one neighbour, with poisoned reverse.

    Entries whose next hop is the receiving neighbour are advertised as
    unreachable so the neighbour never routes back through the sender.
    """
    entries = []
    for dest in sorted(table.entries):
        e = table.entries[dest]
        cost = table.inf if (e.next_hop == to_neighbor and dest != table.owner) else e.cost
        entries.append((dest, min(cost, table.inf)))
    return ControlMessage(MessageKind.ADVERTISEMENT, origin=table.owner, entries=tuple(entries))


def process_advertisement(
    table: RoutingTable, from_: int, adv: ControlMessage, now: int
) -> bool:
    """Relax the table against a neighbour's advertised vector.

    A candidate cost of advertised+1 (capped at INF) is adopted when it beats
    the current entry, or whenever the entry already routes through the
    advertiser: a route through a neighbour must track that neighbour's own
    view, including cost increases and silently dropped destinations.
    Returns True when any entry's (next hop, cost) changed, which obliges the
    caller to queue triggered advertisements.
    """
    if adv.kind is not MessageKind.ADVERTISEMENT:
        raise ValueError(f"not an advertisement: {adv.kind}")
    inf = table.inf
    advertised = {d: min(c, inf) for d, c in adv.entries}
    changed = False
    for dest in sorted(advertised):
        if dest == table.owner:
            continue  # the self-entry is permanent
        candidate = min(advertised[dest] + 1, inf)
        entry = table.entries.get(dest)
        if entry is None:
            if candidate < inf:
                table.entries[dest] = RouteEntry(dest, from_, candidate, now)
                changed = True
        elif candidate < entry.cost:
            entry.next_hop = from_
            entry.cost = candidate
            entry.last_updated = now
            changed = True
        elif entry.next_hop == from_:
            if candidate != entry.cost:
                entry.cost = candidate
                if candidate >= inf:
                    entry.next_hop = None
                entry.last_updated = now
                changed = True
            else:
                entry.last_updated = now
    # Destinations we route via the advertiser but which it no longer knows
    # are gone from its vector entirely; poison them.
    for dest in sorted(table.entries):
        entry = table.entries[dest]
        if (
            dest != table.owner
            and entry.next_hop == from_
            and dest not in advertised
            and entry.cost < inf
        ):
            entry.cost = inf
            entry.next_hop = None
            entry.last_updated = now
            changed = True
    return changed


def handle_withdraw(table: RoutingTable, leaving: int, now: int) -> bool:
    """Remove a departed node and poison every route that went through it.

    Returns True when the table changed; the caller then queues triggered
    advertisements. The withdraw itself is never re-flooded: the poisoned
    entries propagate the news.
    """
    changed = False
    if leaving in table.entries and leaving != table.owner:
        del table.entries[leaving]
        changed = True
    for entry in table.entries.values():
        if entry.next_hop == leaving and entry.destination != table.owner:
            entry.cost = table.inf
            entry.next_hop = None
            entry.last_updated = now
            changed = True
    return changed


def next_hop(table: RoutingTable, dest: int) -> int | None:
    """Usable next hop toward ``dest``; the owner itself for self-delivery.

    None signals no-route, which tells the transport layer to trigger
    discovery.
    """
    if dest == table.owner:
        return table.owner
    entry = table.entries.get(dest)
    if entry is None or entry.cost >= table.inf or entry.next_hop is None:
        return None
    return entry.next_hop


def select_next_hop(candidates: Iterable[tuple[int, int]]) -> int | None:
    """Pick among equal-cost next hops: least queue depth, then lowest id."""
    best = None
    for neighbor, depth in candidates:
        key = (depth, neighbor)
        if best is None or key < best:
            best = key
    return best[1] if best is not None else None


def trigger_discovery(
    origin: int, target: int, neighbors: Iterable[int], inf: int = INF
) -> list[tuple[int, ControlMessage]]:
    """Initial hop of an on-demand discovery flood for ``target``.

    Returns (neighbour, request) pairs. Each receiver answers with a full
    advertisement to whoever it heard the request from and re-forwards the
    request once, so discovery reuses the distance-vector machinery instead
    of installing source routes.
    """
    msg = ControlMessage(
        MessageKind.DISCOVERY_REQUEST, origin=origin, target=target, ttl=inf
    )
    return [(m, msg) for m in sorted(set(neighbors)) if m != origin]
