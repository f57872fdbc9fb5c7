"""Interactive dialogue loop tying the slot mapper to the scheduler.

The initiator types a request ("schedule a meeting with Gautam for wednesday
afternoon"); the mapper predicts preferred slots, first-fit runs restricted to
that mask, the policy takes the schedule/defer decision, and participant
replies are either simulated from the profile or typed in.
"""

from __future__ import annotations

from typing import IO, Optional

import numpy as np

from .calendar import DAY_NAMES, SLOTS_PER_DAY, Meeting
from .environment import ACTION_SCHEDULE, SchedulingEnv, participant_respond
from .mapper import MapperModel
from .phrases import parse_participants
from .policy import PolicyNet
from .trainer import encode_state

PROMPT = "you> "
YES_WORDS = frozenset({"yes", "y", "sure", "ok", "okay", "fine", "yep"})
NO_WORDS = frozenset({"no", "n", "nope", "cannot", "cant"})


def slot_name(slot: int) -> str:
    """Human-readable slot label, e.g. 'wednesday 13:00 (slot 20)'."""
    day = DAY_NAMES[slot // SLOTS_PER_DAY]
    hour = 9 + slot % SLOTS_PER_DAY
    return f"{day} {hour}:00 (slot {slot})"


def _decide(policy: Optional[PolicyNet], state: np.ndarray) -> int:
    if policy is None:
        return ACTION_SCHEDULE
    dist = policy.forward(state)
    return ACTION_SCHEDULE if dist[0] >= 0.5 else 1


def run_repl(
    mapper: MapperModel,
    env: SchedulingEnv,
    policy: Optional[PolicyNet] = None,
    *,
    directory: dict[str, int],
    input_stream: IO[str],
    output: IO[str],
    designation: str = "junior",
    duration: int = 1,
    typed_replies: bool = False,
) -> None:
    """Read-decide-print loop; EOF or 'quit' exits cleanly."""

    def say(text: str) -> None:
        output.write(text + "\n")

    say("Meeting scheduler. Describe the meeting (or 'quit').")
    id_by_name = {name: uid for name, uid in directory.items()}
    name_by_id = {uid: name for name, uid in id_by_name.items()}
    while True:
        output.write(PROMPT)
        output.flush()
        line = input_stream.readline()
        if not line:
            say("")
            say("bye")
            return
        line = line.strip()
        if not line:
            continue
        if line.lower() in {"quit", "exit"}:
            say("bye")
            return
        tokens = line.split()
        participants = parse_participants(directory, tokens)
        if not participants:
            say("I don't recognise any participant names there. Who should attend?")
            continue
        mask = mapper.predict_slots(tokens)
        if mask.sum() == 0:
            say("I couldn't find a time preference in that. When would suit?")
            continue
        names = ", ".join(name_by_id.get(p, str(p)) for p in participants)
        meeting = Meeting(
            id=env.new_meeting_id(),
            duration=duration,
            participants=participants,
            initiator=0,
            designation=designation,
            arrival_timestep=env.timestep,
        )
        env.arrived_total += 1
        env.waiting.appendleft(meeting)
        slot = env.grid.find_first_fit(duration, allowed=mask.astype(bool))
        if slot is None:
            env.waiting.popleft()
            env.backlog.append(meeting)
            say(f"No free run of {duration} slot(s) inside your preferred times; "
                f"meeting #{meeting.id} pushed back to the backlog.")
            continue
        state = encode_state(env.grid, env.waiting, len(env.backlog), slot, meeting)
        action = _decide(policy, state)
        env.waiting.popleft()
        if action != ACTION_SCHEDULE:
            env.backlog.append(meeting)
            say(f"Agent deferred: meeting #{meeting.id} pushed back to the backlog.")
            continue
        say(f"Requesting {names} for {slot_name(slot)}"
            + (f" through {slot_name(slot + duration - 1)}" if duration > 1 else ""))
        accepted = _collect_reply(env, meeting, slot, typed_replies, input_stream, output)
        if accepted:
            env.grid.occupy(slot, meeting)
            say(f"Confirmed: meeting #{meeting.id} booked at {slot_name(slot)} for {duration} slot(s).")
        else:
            env.backlog.append(meeting)
            say(f"Declined: meeting #{meeting.id} pushed back to the backlog.")


def _collect_reply(
    env: SchedulingEnv,
    meeting: Meeting,
    slot: int,
    typed_replies: bool,
    input_stream: IO[str],
    output: IO[str],
) -> bool:
    if not typed_replies:
        return all(
            participant_respond(meeting, slot, env.profile, env.rng)
            for _ in meeting.participants
        )
    while True:
        output.write("participants> ")
        output.flush()
        line = input_stream.readline()
        if not line:
            return False
        words = {w.strip(".,!?").lower() for w in line.split()}
        if words & YES_WORDS:
            return True
        if words & NO_WORDS:
            return False
        output.write("Please answer yes or no.\n")
