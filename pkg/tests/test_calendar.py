"""Slot grid: first-fit scan order, booking invariants, day rotation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slotsched.calendar import (
    ALLOWED_DURATIONS,
    DAYS,
    NUM_SLOTS,
    SLOTS_PER_DAY,
    Meeting,
    SlotGrid,
)


def make_meeting(mid=1, duration=1, designation="junior"):
    return Meeting(id=mid, duration=duration, participants=[1, 2], initiator=3, designation=designation)


def first_fit_oracle(grid: SlotGrid, duration: int):
    """Independent exhaustive scan over all start positions in scan order."""
    for offset in range(DAYS):
        day = (grid.day_cursor + offset) % DAYS
        for start in range(SLOTS_PER_DAY * day, SLOTS_PER_DAY * (day + 1)):
            end = start + duration
            if end > SLOTS_PER_DAY * (day + 1):
                continue
            if not grid.occupancy[start:end].any():
                return start
    return None


# --- find_first_fit ---


def test_first_fit_empty_grid_returns_slot_zero():
    assert SlotGrid().find_first_fit(1) == 0


def test_first_fit_skips_day_with_short_run():
    """Day 0 with slots 0..4 occupied leaves only a 3-run; a 6-slot run lands on day 1."""
    grid = SlotGrid()
    grid.occupancy[0:5] = True
    grid.booked_by[0:5] = 9
    assert first_fit_oracle(grid, 6) == 8
    assert grid.find_first_fit(6) == 8


def test_first_fit_full_grid_returns_none():
    grid = SlotGrid()
    grid.occupancy[:] = True
    grid.booked_by[:] = 1
    for duration in ALLOWED_DURATIONS:
        assert grid.find_first_fit(duration) is None


def test_first_fit_scan_starts_at_day_cursor():
    grid = SlotGrid()
    grid.day_cursor = 3
    assert grid.find_first_fit(2) == 24


def test_first_fit_wraps_past_friday():
    grid = SlotGrid()
    grid.day_cursor = 4
    grid.occupancy[32:40] = True
    grid.booked_by[32:40] = 2
    assert grid.find_first_fit(4) == 0


def test_first_fit_rejects_bad_duration():
    with pytest.raises(ValueError, match="duration"):
        SlotGrid().find_first_fit(3)


def test_first_fit_respects_allowed_mask():
    grid = SlotGrid()
    allowed = np.zeros(NUM_SLOTS, dtype=bool)
    allowed[20:24] = True
    assert grid.find_first_fit(2, allowed=allowed) == 20
    assert grid.find_first_fit(6, allowed=allowed) is None


@settings(max_examples=200, deadline=None)
@given(
    booked=st.lists(st.integers(min_value=0, max_value=NUM_SLOTS - 1), max_size=30),
    cursor=st.integers(min_value=0, max_value=DAYS - 1),
    duration=st.sampled_from(ALLOWED_DURATIONS),
)
def test_first_fit_matches_exhaustive_oracle(booked, cursor, duration):
    grid = SlotGrid()
    grid.day_cursor = cursor
    for slot in booked:
        grid.occupancy[slot] = True
        grid.booked_by[slot] = 1
    assert grid.find_first_fit(duration) == first_fit_oracle(grid, duration)


@settings(max_examples=200, deadline=None)
@given(
    booked=st.lists(st.integers(min_value=0, max_value=NUM_SLOTS - 1), max_size=35),
    cursor=st.integers(min_value=0, max_value=DAYS - 1),
    duration=st.sampled_from(ALLOWED_DURATIONS),
)
def test_first_fit_result_is_occupiable(booked, cursor, duration):
    """Round trip: a found slot always satisfies occupy's preconditions."""
    grid = SlotGrid()
    grid.day_cursor = cursor
    for slot in booked:
        grid.occupancy[slot] = True
        grid.booked_by[slot] = 100 + slot  # distinct single-slot bookings
    start = grid.find_first_fit(duration)
    if start is not None:
        grid.occupy(start, make_meeting(mid=777, duration=duration))
        grid.check_invariants()


# --- occupy ---


def test_occupy_marks_exact_slots():
    grid = SlotGrid()
    grid.occupy(8, make_meeting(mid=4, duration=2))
    assert set(np.flatnonzero(grid.occupancy)) == {8, 9}
    assert grid.booked_by[8] == grid.booked_by[9] == 4


def test_occupy_overlap_raises():
    grid = SlotGrid()
    grid.occupy(8, make_meeting(mid=4, duration=2))
    with pytest.raises(ValueError, match="booked"):
        grid.occupy(9, make_meeting(mid=5, duration=2))


def test_occupy_across_day_boundary_raises():
    with pytest.raises(ValueError, match="day boundary"):
        SlotGrid().occupy(6, make_meeting(duration=4))


# --- rotate_day ---


def test_rotate_clears_band_and_reports_freed():
    grid = SlotGrid()
    grid.occupy(0, make_meeting(mid=7, duration=2))
    freed = grid.rotate_day()
    assert freed == [7]
    assert not grid.occupancy[0:2].any()
    assert grid.day_cursor == 1


def test_rotate_wraps_cursor():
    grid = SlotGrid()
    grid.day_cursor = 4
    assert grid.rotate_day() == []
    assert grid.day_cursor == 0


def test_five_rotations_are_identity_on_empty_grid():
    grid = SlotGrid()
    for _ in range(DAYS):
        grid.rotate_day()
    assert grid.day_cursor == 0
    assert grid.free_slot_count() == NUM_SLOTS


# --- free_slot_count ---


def test_free_slot_count_cases():
    grid = SlotGrid()
    assert grid.free_slot_count() == 40
    grid.occupy(8, make_meeting(mid=1, duration=6))
    assert grid.free_slot_count() == 34
    grid.occupancy[:] = True
    grid.booked_by[:] = 1
    assert grid.free_slot_count() == 0


# --- conservation over random op sequences ---


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from(["occupy1", "occupy2", "occupy4", "occupy6", "rotate"]), max_size=60))
def test_conservation_over_random_sequences(ops):
    grid = SlotGrid()
    live_durations: dict[int, int] = {}
    next_id = 1
    for op in ops:
        if op == "rotate":
            for freed in grid.rotate_day():
                live_durations.pop(freed)
        else:
            duration = int(op[len("occupy") :])
            start = grid.find_first_fit(duration)
            if start is not None:
                grid.occupy(start, make_meeting(mid=next_id, duration=duration))
                live_durations[next_id] = duration
                next_id += 1
        assert grid.free_slot_count() == NUM_SLOTS - sum(live_durations.values())
        grid.check_invariants()


# --- Meeting validation ---


def test_meeting_rejects_bad_duration():
    with pytest.raises(ValueError, match="duration"):
        Meeting(id=1, duration=3, participants=[1], initiator=2, designation="junior")


def test_meeting_rejects_duplicate_participants():
    with pytest.raises(ValueError, match="duplicate"):
        Meeting(id=1, duration=1, participants=[1, 1], initiator=2, designation="junior")


def test_meeting_rejects_empty_participants():
    with pytest.raises(ValueError, match="non-empty"):
        Meeting(id=1, duration=1, participants=[], initiator=2, designation="junior")
