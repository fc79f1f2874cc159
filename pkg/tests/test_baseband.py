import pytest
from hypothesis import given, strategies as st

from bluehop.baseband import (
    BITS_PER_SLOT,
    CHANNEL_COUNT,
    HOP_RATE_HZ,
    SLOT_HUS,
    SLOT_LENGTHS,
    SLOT_PAIR_US,
    SLOT_US,
    SLOTS_PER_SECOND,
    TICK_HUS,
    TICK_US,
    Clock,
    HopSequence,
    NotSchedulableError,
    OversizePayloadError,
    SlotGrant,
    hop_channel,
    next_tx_start_hus,
    slot_owner,
    slots_for_payload,
    tx_duration_hus,
    tx_duration_us,
)
from bluehop.scatternet import Role


class TestConstants:
    def test_tick_is_half_microsecond_exact(self):
        assert TICK_US == 312.5
        assert TICK_HUS == 625
        assert SLOT_HUS == 2 * TICK_HUS

    def test_sixteen_hundred_slots_per_second(self):
        assert SLOTS_PER_SECOND == 1600
        assert SLOTS_PER_SECOND * SLOT_US == 1_000_000
        assert HOP_RATE_HZ == 1600

    def test_clock_slot_arithmetic(self):
        assert Clock(ticks=0).slot_index == 0
        assert Clock(ticks=2).slot_index == 1
        assert Clock(ticks=7).time_hus == 7 * 625


class TestSlotsForPayload:
    # Enumerated against the three capacity tiers 625/1875/3125.
    @pytest.mark.parametrize(
        "bits,slots",
        [(0, 1), (1, 1), (624, 1), (625, 1), (626, 3), (1875, 3), (1876, 5), (3125, 5)],
    )
    def test_tiers(self, bits, slots):
        assert slots_for_payload(bits).slots == slots

    def test_exhaustive_minimality(self):
        for bits in range(0, 3126):
            sc = slots_for_payload(bits)
            assert sc.capacity_bits >= bits
            smaller = [s for s in SLOT_LENGTHS if s < sc.slots]
            assert all(s * BITS_PER_SLOT < bits for s in smaller)

    def test_oversize_rejected(self):
        with pytest.raises(OversizePayloadError):
            slots_for_payload(3126)

    def test_rate_multiplier_scales_capacity(self):
        assert slots_for_payload(1876, bits_per_slot=1875).slots == 3
        assert slots_for_payload(3 * 3125, bits_per_slot=3 * 625).slots == 5


class TestTxDuration:
    def test_single_slot(self):
        assert tx_duration_us(1) == 625

    def test_slot_pair(self):
        assert tx_duration_us(2) == SLOT_PAIR_US == 1250

    def test_five_slots(self):
        assert tx_duration_us(5) == 5 * 625
        assert tx_duration_hus(5) == 5 * SLOT_HUS


class TestHopChannel:
    def test_frozen_prefix(self):
        seq = HopSequence(seed=123456789)
        assert [hop_channel(seq, i) for i in range(10)] == [
            66, 48, 71, 56, 4, 45, 38, 61, 58, 73,
        ]

    @given(st.integers(min_value=0, max_value=2**63), st.integers(0, 10**9))
    def test_in_range_and_deterministic(self, seed, slot):
        seq = HopSequence(seed=seed)
        c = hop_channel(seq, slot)
        assert 0 <= c < CHANNEL_COUNT
        assert hop_channel(seq, slot) == c

    def test_every_channel_appears(self):
        seq = HopSequence(seed=987654321)
        seen = {hop_channel(seq, i) for i in range(79_000)}
        assert seen == set(range(CHANNEL_COUNT))


class TestSlotOwner:
    def test_master_even(self):
        assert slot_owner(0, Role.MASTER) is SlotGrant.MAY_TRANSMIT
        assert slot_owner(1, Role.MASTER) is SlotGrant.MUST_RECEIVE

    def test_slave_odd(self):
        assert slot_owner(0, Role.ACTIVE_SLAVE) is SlotGrant.MUST_RECEIVE
        assert slot_owner(1, Role.ACTIVE_SLAVE) is SlotGrant.MAY_TRANSMIT

    def test_parked_not_schedulable(self):
        with pytest.raises(NotSchedulableError):
            slot_owner(0, Role.PARKED_SLAVE)

    def test_exactly_one_direction_per_slot(self):
        for slot in range(10):
            grants = {
                slot_owner(slot, Role.MASTER),
                slot_owner(slot, Role.ACTIVE_SLAVE),
            }
            assert grants == {SlotGrant.MAY_TRANSMIT, SlotGrant.MUST_RECEIVE}


class TestNextTxStart:
    def test_aligned_even_slot_starts_now(self):
        assert next_tx_start_hus(0, 0) == 0

    def test_waits_for_parity(self):
        # Mid slot 0, master parity: the next even slot is 2.
        assert next_tx_start_hus(1, 0) == 2 * SLOT_HUS
        # Slave (odd) parity from slot 0 start waits one slot.
        assert next_tx_start_hus(0, 1) == SLOT_HUS

    def test_geometric_mode_has_no_parity(self):
        assert next_tx_start_hus(777, None) == 777

    def test_multislot_start_parity_example(self):
        # A 3-slot master packet starting at slot 4 occupies slots 4-6; the
        # slave's next opportunity is slot 7.
        start = next_tx_start_hus(4 * SLOT_HUS, 0)
        assert start == 4 * SLOT_HUS
        end = start + tx_duration_hus(3)
        assert end == 7 * SLOT_HUS
        assert next_tx_start_hus(end, 1) == 7 * SLOT_HUS
        occupied = range(start // SLOT_HUS, end // SLOT_HUS)
        assert list(occupied) == [4, 5, 6]
