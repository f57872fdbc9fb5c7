"""Circular weekly slot grid: 5 days x 8 slots, rotating one day per timestep.

Slots are indexed 0..39; day d owns the band [8d, 8d+8). A booking always
occupies a contiguous run inside a single day band. `rotate_day` clears the
band under the cursor (that day has elapsed) and advances the cursor, so the
grid always describes the next five days.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

DAYS = 5
SLOTS_PER_DAY = 8
NUM_SLOTS = DAYS * SLOTS_PER_DAY
ALLOWED_DURATIONS = (1, 2, 4, 6)

DAY_NAMES = ("monday", "tuesday", "wednesday", "thursday", "friday")

JUNIOR = "junior"
MID = "mid"
SENIOR = "senior"
DESIGNATIONS = (JUNIOR, MID, SENIOR)


@dataclass
class Meeting:
    """A scheduling request for a contiguous run of slots."""

    id: int
    duration: int
    participants: list[int]
    initiator: int
    designation: str
    arrival_timestep: int = 0

    def __post_init__(self) -> None:
        if self.duration not in ALLOWED_DURATIONS:
            raise ValueError(f"duration must be one of {ALLOWED_DURATIONS}, got {self.duration}")
        if not self.participants:
            raise ValueError("participants must be non-empty")
        if len(set(self.participants)) != len(self.participants):
            raise ValueError("participants must be duplicate-free")
        if self.designation not in DESIGNATIONS:
            raise ValueError(f"designation must be one of {DESIGNATIONS}, got {self.designation!r}")


def day_band(day: int) -> range:
    """Slot indices belonging to day `day`."""
    return range(SLOTS_PER_DAY * day, SLOTS_PER_DAY * (day + 1))


@dataclass
class SlotGrid:
    """Occupancy map over the 40 weekly slots plus the current-day cursor.

    occupancy[i] is True iff slot i is booked; booked_by[i] then holds the
    meeting id (-1 when free).
    """

    occupancy: np.ndarray = field(default_factory=lambda: np.zeros(NUM_SLOTS, dtype=bool))
    day_cursor: int = 0
    booked_by: np.ndarray = field(default_factory=lambda: np.full(NUM_SLOTS, -1, dtype=np.int64))

    def copy(self) -> "SlotGrid":
        return SlotGrid(self.occupancy.copy(), self.day_cursor, self.booked_by.copy())

    def free_slot_count(self) -> int:
        """Number of free slots across the whole grid."""
        return int(NUM_SLOTS - np.count_nonzero(self.occupancy))

    def find_first_fit(self, duration: int, allowed: Optional[np.ndarray] = None) -> Optional[int]:
        """First start slot of a free contiguous within-day run of `duration`.

        Days are scanned in order day_cursor, day_cursor+1, ... (mod 5) and
        left to right within each day. `allowed`, when given, is a boolean
        mask restricting which slots the run may use. Returns None when no
        day has a fitting run.
        """
        if duration not in ALLOWED_DURATIONS:
            raise ValueError(f"duration must be one of {ALLOWED_DURATIONS}, got {duration}")
        usable = ~self.occupancy
        if allowed is not None:
            usable = usable & np.asarray(allowed, dtype=bool)
        for offset in range(DAYS):
            day = (self.day_cursor + offset) % DAYS
            base = SLOTS_PER_DAY * day
            for start in range(base, base + SLOTS_PER_DAY - duration + 1):
                if usable[start : start + duration].all():
                    return start
        return None

    def occupy(self, start: int, meeting: Meeting) -> None:
        """Book slots [start, start+duration) for `meeting`.

        Raises ValueError on double booking or a run crossing a day boundary.
        """
        end = start + meeting.duration
        if start < 0 or end > NUM_SLOTS:
            raise ValueError(f"slot run [{start}, {end}) out of range")
        if start // SLOTS_PER_DAY != (end - 1) // SLOTS_PER_DAY:
            raise ValueError(f"slot run [{start}, {end}) crosses a day boundary")
        if self.occupancy[start:end].any():
            raise ValueError(f"slot run [{start}, {end}) is already partially booked")
        self.occupancy[start:end] = True
        self.booked_by[start:end] = meeting.id

    def rotate_day(self) -> list[int]:
        """Clear the current day band, advance the cursor, return freed meeting ids."""
        band = day_band(self.day_cursor)
        freed: list[int] = []
        for i in band:
            if self.occupancy[i]:
                mid = int(self.booked_by[i])
                if mid not in freed:
                    freed.append(mid)
        self.occupancy[band.start : band.stop] = False
        self.booked_by[band.start : band.stop] = -1
        self.day_cursor = (self.day_cursor + 1) % DAYS
        return freed

    def booked_meeting_ids(self) -> set[int]:
        return {int(m) for m in self.booked_by[self.occupancy]}

    def check_invariants(self) -> None:
        """Raise AssertionError if any structural invariant is violated."""
        assert 0 <= self.day_cursor < DAYS
        occupied = self.occupancy
        assert ((self.booked_by >= 0) == occupied).all(), "occupancy and booked_by disagree"
        for mid in self.booked_meeting_ids():
            slots = np.flatnonzero(self.booked_by == mid)
            assert slots.size > 0
            lo, hi = int(slots[0]), int(slots[-1])
            assert hi - lo + 1 == slots.size, f"meeting {mid} booked non-contiguously"
            assert lo // SLOTS_PER_DAY == hi // SLOTS_PER_DAY, f"meeting {mid} crosses a day band"


def slots_of(meeting_start: int, duration: int) -> Iterable[int]:
    """Slot indices covered by a run starting at `meeting_start`."""
    return range(meeting_start, meeting_start + duration)
