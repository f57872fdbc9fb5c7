"""Meeting workload, queues, benchmark and participant behaviour.

The environment owns the grid plus two FIFO queues: arriving meetings land in
an unbounded backlog, and up to seven of them at a time are admitted to the
waiting queue where scheduling decisions happen. One timestep = decisions over
the waiting queue, a day rotation, fresh arrivals, and a waiting refill.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .calendar import DESIGNATIONS, NUM_SLOTS, SENIOR, Meeting, SlotGrid

WAITING_CAPACITY = 7
BACKLOG_FULL = 50  # saturation point of the thermometer encoding
BACKLOG_VECTOR_SIZE = 5

DURATION_VALUES = (1, 2, 4, 6)
DURATION_PROBS = (0.4, 0.2, 0.2, 0.2)
DESIGNATION_PROBS = (0.5, 0.3, 0.2)  # junior, mid, senior
MIN_PARTICIPANTS = 2
MAX_PARTICIPANTS = 5

# Expected slots per meeting under DURATION_PROBS; one day (8 slots) is freed
# per timestep, so load% = expected requested slots per timestep / 8 * 100.
MEAN_SLOTS_PER_MEETING = sum(d * p for d, p in zip(DURATION_VALUES, DURATION_PROBS))
CAPACITY_SLOTS_PER_TIMESTEP = 8


class Outcome(Enum):
    BOOKED = "booked"
    REJECTED = "rejected"
    DEFERRED = "deferred"


ACTION_SCHEDULE = 0
ACTION_DEFER = 1


@dataclass
class LoadBand:
    """Arrival load range as a percentage of per-timestep slot capacity."""

    low_pct: float
    high_pct: float

    def __post_init__(self) -> None:
        if not (0 <= self.low_pct <= self.high_pct):
            raise ValueError(f"need 0 <= low_pct <= high_pct, got ({self.low_pct}, {self.high_pct})")


@dataclass
class ParticipantProfile:
    """Slot preferences shared by every participant in the simulation.

    Participants reject any request touching an uncomfortable slot unless the
    initiator is senior and `senior_override` is set. `random_reject_prob` is
    a stochastic hook, off by default, for flaky participants.
    """

    uncomfortable_slots: frozenset[int] = frozenset()
    senior_override: bool = False
    random_reject_prob: float = 0.0

    def __post_init__(self) -> None:
        bad = [s for s in self.uncomfortable_slots if not 0 <= s < NUM_SLOTS]
        if bad:
            raise ValueError(f"uncomfortable slots out of range: {bad}")
        self.uncomfortable_slots = frozenset(self.uncomfortable_slots)


@dataclass
class QueueState:
    backlog: deque[Meeting] = field(default_factory=deque)
    waiting: deque[Meeting] = field(default_factory=deque)


def load_user_directory(path: Optional[str | Path] = None) -> dict[str, int]:
    """Name -> user id map; defaults to the bundled directory."""
    if path is None:
        text = resources.files("slotsched.data").joinpath("users.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    return {entry["name"].lower(): int(entry["id"]) for entry in raw["users"]}


def backlog_vector(backlog_len: int) -> np.ndarray:
    """Thermometer encoding of backlog fullness against capacity 50.

    Element i covers backlog sizes (10i, 10(i+1)]: 1 when the backlog exceeds
    the bucket, a fraction inside it, 0 below.
    """
    out = np.empty(BACKLOG_VECTOR_SIZE, dtype=np.float64)
    step = BACKLOG_FULL / BACKLOG_VECTOR_SIZE
    for i in range(BACKLOG_VECTOR_SIZE):
        out[i] = min(max((backlog_len - step * i) / step, 0.0), 1.0)
    return out


def compute_benchmark(grid: SlotGrid, waiting: Sequence[Meeting]) -> int:
    """floor(free slots * queue length / total requested slots of the queue).

    An empty waiting queue benchmarks at 0: there is nothing to decide.
    """
    if not waiting:
        return 0
    total = sum(m.duration for m in waiting)
    return grid.free_slot_count() * len(waiting) // total


def participant_respond(
    meeting: Meeting,
    slot: int,
    profile: ParticipantProfile,
    rng: Optional[np.random.Generator] = None,
) -> bool:
    """True = accept. Deterministic unless the profile's stochastic hook is on."""
    if not 0 <= slot < NUM_SLOTS:
        raise ValueError(f"slot {slot} out of range")
    covered = range(slot, slot + meeting.duration)
    uncomfortable = any(s in profile.uncomfortable_slots for s in covered)
    if uncomfortable and not (profile.senior_override and meeting.designation == SENIOR):
        return False
    if profile.random_reject_prob > 0.0 and rng is not None:
        if rng.random() < profile.random_reject_prob:
            return False
    return True


@dataclass
class ArrivalEvent:
    """One recorded arrival, as stored in a workload replay file."""

    timestep: int
    meeting: Meeting


def write_replay(path: str | Path, events: Sequence[ArrivalEvent]) -> None:
    """Write a workload replay file (one arrival per line)."""
    lines = ["# slotsched workload v1"]
    for ev in events:
        m = ev.meeting
        parts = ";".join(str(p) for p in m.participants)
        lines.append(f"{ev.timestep},{m.id},{m.duration},{m.initiator},{m.designation},{parts}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_replay(path: str | Path) -> list[ArrivalEvent]:
    events: list[ArrivalEvent] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise ValueError(f"{path}:{lineno}: expected 6 fields, got {len(fields)}")
        timestep, mid, duration, initiator, designation, parts = fields
        meeting = Meeting(
            id=int(mid),
            duration=int(duration),
            participants=[int(p) for p in parts.split(";") if p],
            initiator=int(initiator),
            designation=designation,
            arrival_timestep=int(timestep),
        )
        events.append(ArrivalEvent(timestep=int(timestep), meeting=meeting))
    return events


class SchedulingEnv:
    """Grid + queues + workload generator + participant simulator.

    All randomness flows through the generator handed in at construction, so
    two environments built with equal seeds produce identical workloads. The
    agent must use its own separate generator.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        load_band: LoadBand,
        profile: Optional[ParticipantProfile] = None,
        user_ids: Optional[Sequence[int]] = None,
        replay: Optional[Sequence[ArrivalEvent]] = None,
        record: bool = False,
        arrival_step_start: int = 0,
        id_start: int = 1,
    ) -> None:
        self.rng = rng
        self.load_band = load_band
        self.profile = profile or ParticipantProfile()
        if user_ids is None:
            user_ids = sorted(load_user_directory().values())
        self.user_ids = list(user_ids)
        self.grid = SlotGrid()
        self.queues = QueueState()
        self.timestep = 0
        self.arrival_step = arrival_step_start  # counts sample_arrivals calls; replay files key on it
        self._next_meeting_id = id_start
        # conservation bookkeeping
        self.arrived_total = 0
        self.elapsed_total = 0
        # optional bit-exact workload replay; a deque is shared as-is so
        # consecutive per-episode environments can consume one stream
        if replay is None:
            self._replay = None
        elif isinstance(replay, deque):
            self._replay = replay
        else:
            self._replay = deque(replay)
        self.recorded: list[ArrivalEvent] = []
        self._record = record

    # -- queue plumbing ----------------------------------------------------

    @property
    def backlog(self) -> deque[Meeting]:
        return self.queues.backlog

    @property
    def waiting(self) -> deque[Meeting]:
        return self.queues.waiting

    def refill_waiting(self) -> None:
        """Admit backlog meetings (FIFO) until the waiting queue holds 7."""
        while len(self.waiting) < WAITING_CAPACITY and self.backlog:
            self.waiting.append(self.backlog.popleft())

    def admit(self, meeting: Meeting) -> None:
        """Inject an externally created meeting (dialogue path) into the backlog."""
        self.arrived_total += 1
        self.backlog.append(meeting)

    def new_meeting_id(self) -> int:
        mid = self._next_meeting_id
        self._next_meeting_id += 1
        return mid

    # -- workload ----------------------------------------------------------

    def sample_arrivals(self, band: Optional[LoadBand] = None) -> list[Meeting]:
        """Draw one arrival timestep's meetings and append them to the backlog."""
        step = self.arrival_step
        self.arrival_step += 1
        if self._replay is not None:
            return self._replay_arrivals(step)
        band = band or self.load_band
        load = self.rng.uniform(band.low_pct, band.high_pct)
        n = round(load / 100.0 * CAPACITY_SLOTS_PER_TIMESTEP / MEAN_SLOTS_PER_MEETING)
        meetings: list[Meeting] = []
        for _ in range(n):
            duration = int(self.rng.choice(DURATION_VALUES, p=DURATION_PROBS))
            k = int(self.rng.integers(MIN_PARTICIPANTS, MAX_PARTICIPANTS + 1))
            participants = [int(u) for u in self.rng.choice(self.user_ids, size=k, replace=False)]
            initiator = int(self.rng.choice(self.user_ids))
            designation = str(self.rng.choice(DESIGNATIONS, p=DESIGNATION_PROBS))
            meeting = Meeting(
                id=self.new_meeting_id(),
                duration=duration,
                participants=participants,
                initiator=initiator,
                designation=designation,
                arrival_timestep=step,
            )
            meetings.append(meeting)
        for m in meetings:
            self.arrived_total += 1
            self.backlog.append(m)
            if self._record:
                self.recorded.append(ArrivalEvent(timestep=step, meeting=m))
        return meetings

    def _replay_arrivals(self, step: int) -> list[Meeting]:
        assert self._replay is not None
        meetings: list[Meeting] = []
        while self._replay and self._replay[0].timestep == step:
            ev = self._replay.popleft()
            meetings.append(ev.meeting)
            self.arrived_total += 1
            self.backlog.append(ev.meeting)
        return meetings

    # -- decisions ---------------------------------------------------------

    def apply_decision(self, meeting: Meeting, slot: Optional[int], action: int) -> Outcome:
        """Apply a schedule/defer decision for a meeting already out of the queues.

        schedule + unanimous accept -> booked; schedule + any reject -> the
        meeting returns to the backlog tail; defer -> backlog tail.
        """
        if action == ACTION_DEFER:
            self.backlog.append(meeting)
            return Outcome.DEFERRED
        if action != ACTION_SCHEDULE:
            raise ValueError(f"unknown action {action}")
        if slot is None:
            raise ValueError("schedule action requires a slot")
        accepted = all(
            participant_respond(meeting, slot, self.profile, self.rng)
            for _ in meeting.participants
        )
        if not accepted:
            self.backlog.append(meeting)
            return Outcome.REJECTED
        self.grid.occupy(slot, meeting)  # raises on an invalid slot
        return Outcome.BOOKED

    def rotate_day(self) -> list[int]:
        freed = self.grid.rotate_day()
        self.elapsed_total += len(freed)
        return freed

    def end_timestep(self, arrivals: bool = True) -> None:
        """Close a timestep: rotate the day, take arrivals, refill the queue."""
        self.rotate_day()
        self.timestep += 1
        if arrivals:
            self.sample_arrivals()
        self.refill_waiting()

    # -- invariants ----------------------------------------------------------

    def check_conservation(self) -> None:
        """arrived == booked-now + elapsed + backlog + waiting, at a boundary."""
        booked_now = len(self.grid.booked_meeting_ids())
        total = booked_now + self.elapsed_total + len(self.backlog) + len(self.waiting)
        assert total == self.arrived_total, (
            f"conservation violated: arrived={self.arrived_total} "
            f"booked={booked_now} elapsed={self.elapsed_total} "
            f"backlog={len(self.backlog)} waiting={len(self.waiting)}"
        )
        assert len(self.waiting) <= WAITING_CAPACITY
        ids_in_queues = [m.id for m in self.backlog] + [m.id for m in self.waiting]
        assert len(ids_in_queues) == len(set(ids_in_queues)), "meeting id duplicated across queues"
        on_grid = self.grid.booked_meeting_ids()
        assert not on_grid.intersection(ids_in_queues), "meeting both queued and booked"
        self.grid.check_invariants()
