"""Piconet formation over the in-range graph and the usable-link rule.

A piconet is one master plus at most seven active slaves; extra members are
parked. Nodes holding roles in two or more piconets are bridges and stitch
the piconets into a scatternet. Formation uses a greedy descending-degree
heuristic and is fully deterministic for a given graph.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .topology import MAX_NODES, Node, in_range

MAX_ACTIVE_SLAVES = 7


class CapacityError(ValueError):
    pass


class Role(Enum):
    MASTER = "master"
    ACTIVE_SLAVE = "active_slave"
    PARKED_SLAVE = "parked_slave"


class LinkMode(Enum):
    GEOMETRIC = "geometric"
    SCATTERNET = "scatternet"


@dataclass
class Piconet:
    id: int
    master: int
    active_slaves: list[int] = field(default_factory=list)
    parked_slaves: list[int] = field(default_factory=list)

    @property
    def members(self) -> list[int]:
        return [self.master] + self.active_slaves + self.parked_slaves


@dataclass
class Scatternet:
    piconets: list[Piconet] = field(default_factory=list)
    # node -> {piconet id -> Role}
    memberships: dict[int, dict[int, Role]] = field(default_factory=dict)

    @property
    def bridge_nodes(self) -> set[int]:
        return {n for n, roles in self.memberships.items() if len(roles) >= 2}

    def roles_of(self, n: int) -> dict[int, Role]:
        return self.memberships.get(n, {})

    def link_piconet(self, a: int, b: int) -> tuple[int, int] | None:
        """Shared piconet carrying a usable a<->b link, if any.

        Returns (piconet id, transmit parity for ``a``) where parity 0 means
        ``a`` is the master (even slots) and 1 means ``a`` is the active
        slave (odd slots). Only master<->active-slave pairs form links; two
        slaves of one piconet never exchange directly.
        """
        ra, rb = self.roles_of(a), self.roles_of(b)
        for pid in sorted(set(ra) & set(rb)):
            pair = (ra[pid], rb[pid])
            if pair == (Role.MASTER, Role.ACTIVE_SLAVE):
                return pid, 0
            if pair == (Role.ACTIVE_SLAVE, Role.MASTER):
                return pid, 1
        return None


def form_scatternet(adjacency: dict[int, set[int]], seed: int) -> Scatternet:
    """Assign master/slave/bridge roles over the given in-range graph.

    Nodes are visited in descending degree (ties by lower id). An unassigned
    node becomes a master and claims up to seven unassigned in-range
    neighbours as active slaves; further unassigned neighbours are parked.
    In-range nodes already serving another piconet gain an extra active-slave
    role (becoming bridges) while the new piconet has capacity. The result
    depends only on the graph; ``seed`` is accepted for interface stability.
    """
    if len(adjacency) > MAX_NODES:
        raise CapacityError(f"{len(adjacency)} nodes exceeds the {MAX_NODES}-node cap")
    order = sorted(adjacency, key=lambda n: (-len(adjacency[n]), n))
    net = Scatternet()
    assigned: set[int] = set()

    def grant(pico: Piconet, n: int, role: Role) -> None:
        net.memberships.setdefault(n, {})[pico.id] = role
        assigned.add(n)
        if role is Role.ACTIVE_SLAVE:
            pico.active_slaves.append(n)
        elif role is Role.PARKED_SLAVE:
            pico.parked_slaves.append(n)

    for n in order:
        if n in assigned:
            continue
        pico = Piconet(id=len(net.piconets), master=n)
        net.piconets.append(pico)
        net.memberships.setdefault(n, {})[pico.id] = Role.MASTER
        assigned.add(n)
        unclaimed = [m for m in sorted(adjacency[n]) if m not in assigned]
        for m in unclaimed:
            if len(pico.active_slaves) < MAX_ACTIVE_SLAVES:
                grant(pico, m, Role.ACTIVE_SLAVE)
            else:
                grant(pico, m, Role.PARKED_SLAVE)
        for m in sorted(adjacency[n]):
            if m in net.memberships and pico.id not in net.memberships[m]:
                if len(pico.active_slaves) < MAX_ACTIVE_SLAVES:
                    grant(pico, m, Role.ACTIVE_SLAVE)
    return net


def link_allowed(
    a: int,
    b: int,
    world: dict[int, Node],
    net: Scatternet | None,
    mode: LinkMode,
) -> bool:
    """Whether a<->b is a usable link under the chosen mode.

    Geometric mode is the plain radio-range rule. Scatternet mode further
    requires a master/active-slave relation inside a shared piconet, so the
    piconet structure only ever restricts the geometric graph.
    """
    if a == b:
        return False
    if not in_range(world[a], world[b]):
        return False
    if mode is LinkMode.GEOMETRIC:
        return True
    if net is None:
        return False
    return net.link_piconet(a, b) is not None


def scatternet_to_json(net: Scatternet) -> dict:
    return {
        "piconets": [
            {
                "id": p.id,
                "master": p.master,
                "active_slaves": sorted(p.active_slaves),
                "parked_slaves": sorted(p.parked_slaves),
            }
            for p in net.piconets
        ],
        "bridges": sorted(net.bridge_nodes),
    }
