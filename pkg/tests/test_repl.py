"""Dialogue loop: mapper-constrained booking, pushbacks, clarifications."""

import io

import numpy as np

from slotsched.calendar import NUM_SLOTS
from slotsched.environment import LoadBand, ParticipantProfile, SchedulingEnv
from slotsched.phrases import load_phrase_table, oracle_map
from slotsched.repl import run_repl, slot_name


class OracleMapper:
    """Rule-based stand-in for a trained model; same predict_slots surface."""

    def __init__(self):
        self.table = load_phrase_table()

    def predict_slots(self, tokens):
        text = " ".join(tokens).lower()
        for day in self.table.days:
            for phrase in sorted(self.table.phrases, key=len, reverse=True):
                if day in text and phrase in text:
                    return oracle_map(self.table, day, phrase)
        return np.zeros(NUM_SLOTS, dtype=np.int8)


DIRECTORY = {"gautam": 1, "puneet": 2}


def run_session(script, env=None, policy=None, typed=False):
    env = env or SchedulingEnv(np.random.default_rng(0), LoadBand(0, 0))
    out = io.StringIO()
    run_repl(
        OracleMapper(),
        env,
        policy,
        directory=DIRECTORY,
        input_stream=io.StringIO(script),
        output=out,
        typed_replies=typed,
    )
    return env, out.getvalue()


def test_wednesday_afternoon_books_inside_mask():
    env, transcript = run_session("schedule a meeting with Gautam for wednesday afternoon\nquit\n")
    booked = np.flatnonzero(env.grid.occupancy)
    assert set(booked) <= {20, 21, 22, 23}
    assert len(booked) == 1
    assert "Confirmed" in transcript


def test_no_reply_pushes_back_to_backlog():
    env, transcript = run_session(
        "schedule a meeting with Gautam for wednesday afternoon\nno\nquit\n", typed=True
    )
    assert env.grid.free_slot_count() == 40
    assert len(env.backlog) == 1
    assert "pushed back to the backlog" in transcript


def test_yes_reply_confirms():
    env, transcript = run_session(
        "schedule a meeting with Puneet for monday morning\nyes\nquit\n", typed=True
    )
    assert env.grid.occupancy[0:3].sum() == 1
    assert "Confirmed" in transcript


def test_unparseable_reply_reprompts():
    env, transcript = run_session(
        "meet Gautam wednesday afternoon\nbanana\nyes\nquit\n", typed=True
    )
    assert "Please answer yes or no." in transcript
    assert "Confirmed" in transcript


def test_unknown_participant_is_clarified_without_state_change():
    env, transcript = run_session("schedule a meeting with Zorblax for monday morning\nquit\n")
    assert "Who should attend?" in transcript
    assert env.arrived_total == 0
    assert env.grid.free_slot_count() == 40


def test_missing_time_phrase_asks_for_clarification():
    env, transcript = run_session("schedule a meeting with Gautam\nquit\n")
    assert "When would suit" in transcript
    assert env.arrived_total == 0


def test_mask_with_no_free_run_pushes_back():
    env = SchedulingEnv(np.random.default_rng(0), LoadBand(0, 0))
    env.grid.occupancy[20:24] = True  # wednesday afternoon fully booked
    env.grid.booked_by[20:24] = 99
    env, transcript = run_session(
        "schedule a meeting with Gautam for wednesday afternoon\nquit\n", env=env
    )
    assert "pushed back" in transcript
    assert len(env.backlog) == 1


def test_simulated_participants_respect_profile():
    env = SchedulingEnv(
        np.random.default_rng(0),
        LoadBand(0, 0),
        profile=ParticipantProfile(uncomfortable_slots=frozenset(range(20, 24))),
    )
    env, transcript = run_session(
        "schedule a meeting with Gautam for wednesday afternoon\nquit\n", env=env
    )
    assert "Declined" in transcript
    assert len(env.backlog) == 1


def test_deferring_policy_pushes_back():
    class DeferPolicy:
        def forward(self, state):
            return np.array([0.0, 1.0])

    env, transcript = run_session(
        "schedule a meeting with Gautam for wednesday afternoon\nquit\n",
        policy=DeferPolicy(),
    )
    assert "Agent deferred" in transcript
    assert len(env.backlog) == 1


def test_eof_exits_cleanly():
    env, transcript = run_session("")
    assert "bye" in transcript


def test_slot_name_formats():
    assert slot_name(20) == "wednesday 13:00 (slot 20)"
    assert slot_name(0) == "monday 9:00 (slot 0)"
