"""Workload sampling, queues, benchmark, participant behaviour, replay files."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slotsched.calendar import Meeting, SlotGrid
from slotsched.environment import (
    ACTION_DEFER,
    ACTION_SCHEDULE,
    LoadBand,
    Outcome,
    ParticipantProfile,
    SchedulingEnv,
    backlog_vector,
    compute_benchmark,
    participant_respond,
    read_replay,
    write_replay,
)


def make_env(seed=0, band=(190, 210), profile=None):
    env = SchedulingEnv(np.random.default_rng(seed), LoadBand(*band), profile=profile)
    return env


def make_meeting(mid=1, duration=1, designation="junior", participants=None):
    return Meeting(
        id=mid,
        duration=duration,
        participants=participants or [1, 2],
        initiator=3,
        designation=designation,
    )


# --- LoadBand ---


def test_load_band_zero_is_allowed():
    assert LoadBand(0, 0).high_pct == 0


def test_load_band_rejects_inverted():
    with pytest.raises(ValueError):
        LoadBand(50, 30)


# --- sample_arrivals ---


def test_expected_slots_per_meeting_is_2_8():
    from slotsched.environment import MEAN_SLOTS_PER_MEETING

    assert MEAN_SLOTS_PER_MEETING == pytest.approx(2.8)


def test_arrival_count_at_200_percent_load():
    """At exactly 200% load: round(2.0 * 8 / 2.8) = 6 meetings."""
    env = make_env(band=(200, 200))
    meetings = env.sample_arrivals()
    assert len(meetings) == 6


def test_zero_band_produces_no_meetings():
    env = make_env(band=(0, 0))
    assert env.sample_arrivals() == []


def test_arrival_metadata_is_valid():
    env = make_env(seed=3)
    meetings = env.sample_arrivals()
    for m in meetings:
        assert m.duration in (1, 2, 4, 6)
        assert 2 <= len(m.participants) <= 5
        assert len(set(m.participants)) == len(m.participants)
        assert m.designation in ("junior", "mid", "senior")


def test_arrival_duration_frequencies():
    env = make_env(seed=5, band=(200, 200))
    durations = []
    for _ in range(2000):
        durations.extend(m.duration for m in env.sample_arrivals())
    counts = {d: durations.count(d) / len(durations) for d in (1, 2, 4, 6)}
    assert counts[1] == pytest.approx(0.4, abs=0.03)
    for d in (2, 4, 6):
        assert counts[d] == pytest.approx(0.2, abs=0.03)


# --- compute_benchmark ---


def test_benchmark_formula_cases():
    grid = SlotGrid()
    waiting = [make_meeting(1, 1), make_meeting(2, 1), make_meeting(3, 2)]
    assert compute_benchmark(grid, waiting) == 30  # floor(40*3/4)

    grid20 = SlotGrid()
    grid20.occupancy[:20] = True
    grid20.booked_by[:20] = 1
    waiting = [make_meeting(1, 1), make_meeting(2, 2), make_meeting(3, 4)]
    assert compute_benchmark(grid20, waiting) == 8  # floor(20*3/7)

    full = SlotGrid()
    full.occupancy[:] = True
    full.booked_by[:] = 1
    assert compute_benchmark(full, waiting) == 0


def test_benchmark_empty_waiting_is_zero():
    assert compute_benchmark(SlotGrid(), []) == 0


@settings(max_examples=100, deadline=None)
@given(
    free=st.integers(min_value=0, max_value=40),
    durations=st.lists(st.sampled_from([1, 2, 4, 6]), min_size=1, max_size=7),
)
def test_benchmark_monotone_in_free_slots(free, durations):
    waiting = [make_meeting(i, d) for i, d in enumerate(durations)]
    grid_a = SlotGrid()
    grid_a.occupancy[free:] = True
    grid_a.booked_by[free:] = 1
    grid_b = SlotGrid()  # fully free
    assert compute_benchmark(grid_a, waiting) <= compute_benchmark(grid_b, waiting)


# --- backlog_vector ---


def test_backlog_vector_cases():
    assert backlog_vector(0).tolist() == [0, 0, 0, 0, 0]
    assert backlog_vector(50).tolist() == [1, 1, 1, 1, 1]
    assert backlog_vector(80).tolist() == [1, 1, 1, 1, 1]
    assert backlog_vector(15).tolist() == [1.0, 0.5, 0.0, 0.0, 0.0]


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=200))
def test_backlog_vector_bounds_and_monotone(n):
    vec = backlog_vector(n)
    assert ((vec >= 0) & (vec <= 1)).all()
    assert (np.diff(vec) <= 1e-12).all()  # thermometer: non-increasing elements


# --- participant_respond ---


def test_uncomfortable_slot_rejected_for_junior():
    profile = ParticipantProfile(uncomfortable_slots=frozenset({5, 14, 26, 35}))
    meeting = make_meeting(duration=1, designation="junior")
    assert participant_respond(meeting, 5, profile) is False


def test_senior_override_accepts_uncomfortable_slot():
    profile = ParticipantProfile(uncomfortable_slots=frozenset({5, 14, 26, 35}), senior_override=True)
    meeting = make_meeting(duration=1, designation="senior")
    assert participant_respond(meeting, 5, profile) is True


def test_no_uncomfortable_slots_always_accepts():
    profile = ParticipantProfile()
    meeting = make_meeting(duration=6)
    for slot in (0, 8, 16, 24, 32):
        assert participant_respond(meeting, slot, profile) is True


def test_covering_run_hits_uncomfortable_slot():
    profile = ParticipantProfile(uncomfortable_slots=frozenset({5}))
    meeting = make_meeting(duration=4)
    assert participant_respond(meeting, 2, profile) is False  # covers 2..5
    assert participant_respond(meeting, 0, profile) is True  # covers 0..3


def test_respond_is_deterministic_by_default():
    profile = ParticipantProfile(uncomfortable_slots=frozenset({9}))
    meeting = make_meeting(duration=2)
    rng = np.random.default_rng(0)
    results = {participant_respond(meeting, 0, profile, rng) for _ in range(20)}
    assert results == {True}


# --- apply_decision ---


def test_defer_grows_backlog_and_leaves_grid():
    env = make_env()
    meeting = make_meeting()
    before = env.grid.free_slot_count()
    outcome = env.apply_decision(meeting, None, ACTION_DEFER)
    assert outcome is Outcome.DEFERRED
    assert len(env.backlog) == 1
    assert env.grid.free_slot_count() == before


def test_schedule_comfortable_slot_books():
    env = make_env()
    meeting = make_meeting(duration=2)
    outcome = env.apply_decision(meeting, 0, ACTION_SCHEDULE)
    assert outcome is Outcome.BOOKED
    assert env.grid.free_slot_count() == 38


def test_schedule_uncomfortable_slot_rejected_to_backlog():
    env = make_env(profile=ParticipantProfile(uncomfortable_slots=frozenset({0})))
    meeting = make_meeting(duration=1, designation="junior")
    outcome = env.apply_decision(meeting, 0, ACTION_SCHEDULE)
    assert outcome is Outcome.REJECTED
    assert len(env.backlog) == 1
    assert env.grid.free_slot_count() == 40


def test_schedule_invalid_slot_raises():
    env = make_env()
    env.grid.occupy(0, make_meeting(mid=50, duration=2))
    with pytest.raises(ValueError):
        env.apply_decision(make_meeting(duration=2), 1, ACTION_SCHEDULE)


# --- refill_waiting ---


def test_refill_caps_at_seven():
    env = make_env()
    for i in range(10):
        env.admit(make_meeting(mid=i))
    env.refill_waiting()
    assert len(env.waiting) == 7
    assert len(env.backlog) == 3


def test_refill_tops_up_partial_queue():
    env = make_env()
    for i in range(6):
        env.waiting.append(make_meeting(mid=i))
    env.admit(make_meeting(mid=100))
    env.admit(make_meeting(mid=101))
    env.refill_waiting()
    assert len(env.waiting) == 7
    assert len(env.backlog) == 1


def test_refill_on_empty_queues_is_noop():
    env = make_env()
    env.refill_waiting()
    assert not env.waiting and not env.backlog


# --- conservation over a long random run ---


def test_meeting_conservation_over_random_run():
    env = make_env(seed=42, band=(150, 250))
    rng = np.random.default_rng(1)
    env.sample_arrivals()
    env.refill_waiting()
    for _ in range(300):
        for _ in range(len(env.waiting)):
            meeting = env.waiting[0]
            slot = env.grid.find_first_fit(meeting.duration)
            env.waiting.popleft()
            if slot is None:
                env.backlog.append(meeting)
                continue
            env.apply_decision(meeting, slot, int(rng.integers(2)))
        env.end_timestep()
        env.check_conservation()


# --- replay files ---


def test_replay_file_round_trip(tmp_path):
    env = make_env(seed=9)
    env._record = True
    for _ in range(5):
        env.sample_arrivals()
    path = tmp_path / "workload.txt"
    write_replay(path, env.recorded)
    events = read_replay(path)
    assert len(events) == len(env.recorded)
    for original, loaded in zip(env.recorded, events):
        assert loaded.timestep == original.timestep
        assert loaded.meeting.id == original.meeting.id
        assert loaded.meeting.duration == original.meeting.duration
        assert loaded.meeting.participants == original.meeting.participants
        assert loaded.meeting.designation == original.meeting.designation


def test_replay_reproduces_arrivals_exactly():
    env = make_env(seed=9)
    env._record = True
    for _ in range(5):
        env.sample_arrivals()
    replay_env = SchedulingEnv(
        np.random.default_rng(123),  # different rng must not matter
        LoadBand(190, 210),
        replay=env.recorded,
    )
    for _ in range(5):
        replay_env.sample_arrivals()
    assert [m.id for m in replay_env.backlog] == [m.id for m in env.backlog]
    assert [m.duration for m in replay_env.backlog] == [m.duration for m in env.backlog]


def test_replay_rejects_malformed_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1,2,3\n", encoding="utf-8")
    with pytest.raises(ValueError, match="expected 6 fields"):
        read_replay(path)
