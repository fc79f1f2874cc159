"""Slot and clock arithmetic, packet slot classes, and the hop sequence.

The simulator keeps time in integer half-microsecond units ("hus") so that
the 312.5 us clock tick is an exact integer (625 hus). Two ticks make a
625 us slot; masters transmit in even slots and active slaves in odd slots.
Each slot carries up to 625 bits at the canonical 1 Mbps symbol rate and
hops to a new channel out of 79, i.e. 1600 slots (and hops) per second.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .scatternet import Role

TICK_US = 312.5
TICK_HUS = 625            # half-microsecond units per clock tick
SLOT_HUS = 2 * TICK_HUS   # 1250 hus = 625 us
SLOT_US = 625
SLOT_PAIR_US = 1250
BITS_PER_SLOT = 625
SLOT_LENGTHS = (1, 3, 5)
CHANNEL_COUNT = 79
HOP_RATE_HZ = 1600
SLOTS_PER_SECOND = 1_000_000 // SLOT_US

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class OversizePayloadError(ValueError):
    pass


class NotSchedulableError(ValueError):
    pass


class SlotGrant(Enum):
    MAY_TRANSMIT = "may_transmit"
    MUST_RECEIVE = "must_receive"


@dataclass(frozen=True)
class Clock:
    """Free-running baseband counter ticking every 312.5 us."""

    ticks: int = 0

    @property
    def slot_index(self) -> int:
        return self.ticks // 2

    @property
    def time_hus(self) -> int:
        return self.ticks * TICK_HUS


@dataclass(frozen=True)
class SlotClass:
    slots: int
    bits_per_slot: int = BITS_PER_SLOT

    def __post_init__(self) -> None:
        if self.slots not in SLOT_LENGTHS:
            raise ValueError(f"packets are 1, 3 or 5 slots, not {self.slots}")

    @property
    def capacity_bits(self) -> int:
        return self.slots * self.bits_per_slot


@dataclass(frozen=True)
class HopSequence:
    seed: int
    channel_count: int = CHANNEL_COUNT
    hop_rate: int = HOP_RATE_HZ


def slots_for_payload(payload_bits: int, bits_per_slot: int = BITS_PER_SLOT) -> SlotClass:
    """Smallest slot class whose capacity covers ``payload_bits``.

    Payloads beyond the 5-slot capacity raise OversizePayloadError; callers
    must fragment first.
    """
    if payload_bits < 0:
        raise ValueError("payload_bits must be non-negative")
    for slots in SLOT_LENGTHS:
        if payload_bits <= slots * bits_per_slot:
            return SlotClass(slots, bits_per_slot)
    raise OversizePayloadError(
        f"{payload_bits} bits exceeds the {SLOT_LENGTHS[-1] * bits_per_slot}-bit packet ceiling"
    )


def tx_duration_us(slots: int) -> int:
    return slots * SLOT_US


def tx_duration_hus(slots: int) -> int:
    return slots * SLOT_HUS


def hop_channel(seq: HopSequence, slot_index: int) -> int:
    """Channel used in ``slot_index``, derived from the sequence seed.

    A splitmix64-style mix keeps the sequence reproducible from
    (seed, slot_index) alone while spreading over all channels.
    """
    if slot_index < 0:
        raise ValueError("slot_index must be non-negative")
    z = (seq.seed + (slot_index + 1) * _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    z ^= z >> 31
    return z % seq.channel_count


def slot_owner(slot_index: int, role: Role) -> SlotGrant:
    """Who may start transmitting in ``slot_index`` for the given role.

    Masters own even slots, active slaves odd slots; multi-slot packets run
    through consecutive slots but must start on the owner's parity. Parked
    slaves hold no slot grant at all.
    """
    if role is Role.MASTER:
        parity = 0
    elif role is Role.ACTIVE_SLAVE:
        parity = 1
    else:
        raise NotSchedulableError("parked slaves exchange no packets")
    return SlotGrant.MAY_TRANSMIT if slot_index % 2 == parity else SlotGrant.MUST_RECEIVE


def next_tx_start_hus(now_hus: int, parity: int | None) -> int:
    """Earliest transmission start at or after ``now_hus``.

    ``parity`` 0/1 selects the next even/odd slot boundary; None means the
    link carries no slot discipline (geometric mode) and transmission starts
    immediately.
    """
    if parity is None:
        return now_hus
    slot = now_hus // SLOT_HUS
    if now_hus % SLOT_HUS:
        slot += 1
    if slot % 2 != parity:
        slot += 1
    return slot * SLOT_HUS
