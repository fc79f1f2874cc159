"""End-to-end delivery: sealing, fragmentation, acks and retransmission.

Payloads are sealed with a deterministic keystream derived from the scenario
seed and the (source, destination) pair, so relays can forward but never
read them; only the destination opens the seal. Sealed payloads are split
into slot-sized fragments, acknowledged end to end after reassembly, and
retransmitted over an alternate first hop when the ack timer expires.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .baseband import BITS_PER_SLOT, SLOT_LENGTHS, SlotClass, slots_for_payload

DEFAULT_RETRIES = 3
DEFAULT_ACK_TIMEOUT_HUS = 200_000  # 100 ms simulated


class OpacityViolation(AssertionError):
    """A node other than the destination tried to open a sealed payload."""


def _keystream(seed: int, src: int, dst: int, length: int) -> bytes:
    out = bytearray()
    label = f"seal:{seed}:{src}:{dst}".encode()
    counter = 0
    while len(out) < length:
        out += hashlib.sha256(label + b":" + str(counter).encode()).digest()
        counter += 1
    return bytes(out[:length])


def seal_payload(plaintext: bytes, src: int, dst: int, scenario_seed: int) -> bytes:
    """XOR the plaintext with the (seed, src, dst) keystream; length preserved."""
    ks = _keystream(scenario_seed, src, dst, len(plaintext))
    return bytes(p ^ k for p, k in zip(plaintext, ks))


def open_payload(sealed: bytes, src: int, dst: int, scenario_seed: int) -> bytes:
    """Inverse of seal_payload."""
    return seal_payload(sealed, src, dst, scenario_seed)


def open_payload_at(
    node: int, sealed: bytes, src: int, dst: int, scenario_seed: int
) -> bytes:
    """Open a sealed payload, asserting the caller is the destination."""
    if node != dst:
        raise OpacityViolation(f"node {node} tried to open a payload sealed for {dst}")
    return open_payload(sealed, src, dst, scenario_seed)


def make_payload(scenario_seed: int, msg_id: int, size: int) -> bytes:
    """Deterministic synthetic traffic payload of ``size`` bytes."""
    return _keystream(scenario_seed ^ 0x5CE2A810, msg_id, size, size)


def max_fragment_bytes(bits_per_slot: int = BITS_PER_SLOT) -> int:
    return (SLOT_LENGTHS[-1] * bits_per_slot) // 8


def fragment_sealed(sealed: bytes, bits_per_slot: int = BITS_PER_SLOT) -> list[bytes]:
    """Split a sealed payload into pieces each fitting the largest packet.

    An empty payload still yields one (empty) fragment so the message exists
    on the wire.
    """
    step = max_fragment_bytes(bits_per_slot)
    if not sealed:
        return [b""]
    return [sealed[i : i + step] for i in range(0, len(sealed), step)]


@dataclass
class DataPacket:
    msg_id: int
    src: int
    dst: int
    fragment_index: int
    fragment_count: int
    sealed_payload: bytes
    slot_class: SlotClass
    # Simulator-only observability: every node the packet has visited,
    # starting with the source.
    hop_trace: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.hop_trace:
            self.hop_trace = [self.src]
        assert len(self.sealed_payload) * 8 <= self.slot_class.capacity_bits


def packets_for_message(
    msg_id: int,
    src: int,
    dst: int,
    sealed: bytes,
    bits_per_slot: int = BITS_PER_SLOT,
) -> list[DataPacket]:
    """Fresh packets for every fragment of a sealed payload."""
    pieces = fragment_sealed(sealed, bits_per_slot)
    return [
        DataPacket(
            msg_id=msg_id,
            src=src,
            dst=dst,
            fragment_index=i,
            fragment_count=len(pieces),
            sealed_payload=piece,
            slot_class=slots_for_payload(len(piece) * 8, bits_per_slot),
        )
        for i, piece in enumerate(pieces)
    ]


@dataclass
class Ack:
    """End-to-end acknowledgement, emitted by the destination after reassembly."""

    msg_id: int
    src: int  # the data packet's destination
    dst: int  # the data packet's source
    hops: int = 0


@dataclass
class PendingTransfer:
    msg_id: int
    src: int
    dst: int
    plaintext: bytes
    fragments: list[tuple[int, bytes]]
    deadline: int
    sent_at: int = 0
    retries_left: int = DEFAULT_RETRIES
    routes_tried: set[int] = field(default_factory=set)
    retransmissions: int = 0
    last_drop_class: str | None = None


def choose_first_hop(
    candidates: list[tuple[int, int]], routes_tried: set[int]
) -> int | None:
    """Pick a first hop, preferring one not tried before.

    Falls back to the best available candidate when every minimal-cost
    neighbour has been tried already.
    """
    from .routing import select_next_hop

    fresh = [(n, d) for n, d in candidates if n not in routes_tried]
    return select_next_hop(fresh if fresh else candidates)
