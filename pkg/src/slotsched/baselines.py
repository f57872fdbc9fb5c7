"""Non-learning reference schedulers run against the same environment.

Baselines reorder the waiting queue (shortest-job-first, arrival order, or a
uniform shuffle) and always attempt to schedule; a meeting is pushed back only
when no first-fit slot exists or participants reject. They share
`apply_decision` with the learning path so grid invariants cannot diverge.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .calendar import Meeting
from .environment import ACTION_SCHEDULE, Outcome, SchedulingEnv
from .trainer import EpisodeStats

SJF = "sjf"
FCFS = "fcfs"
RANDOM = "random"
BASELINE_KINDS = (SJF, FCFS, RANDOM)


def baseline_order(
    kind: str,
    waiting: Sequence[Meeting],
    rng: Optional[np.random.Generator] = None,
) -> list[int]:
    """Decision order over the queue as indices into `waiting`."""
    indices = list(range(len(waiting)))
    if kind == SJF:
        return sorted(indices, key=lambda i: waiting[i].duration)  # stable on ties
    if kind == FCFS:
        return indices
    if kind == RANDOM:
        if rng is None:
            raise ValueError("random baseline needs a generator")
        perm = np.array(indices)
        rng.shuffle(perm)
        return [int(i) for i in perm]
    raise ValueError(f"unknown baseline kind {kind!r}")


def run_baseline_timestep(
    env: SchedulingEnv,
    kind: str,
    rng: Optional[np.random.Generator] = None,
    *,
    drain: bool = False,
    arrivals: Optional[bool] = None,
    stats: Optional[EpisodeStats] = None,
) -> int:
    """One timestep under a fixed policy; returns the number of bookings."""
    waiting = list(env.waiting)
    env.waiting.clear()
    order = baseline_order(kind, waiting, rng)
    scheduled = 0
    for idx in order:
        meeting = waiting[idx]
        if stats is not None:
            stats.presented[meeting.duration] += 1
        slot = env.grid.find_first_fit(meeting.duration)
        if slot is None:
            env.backlog.append(meeting)
            if stats is not None:
                stats.pushback_nofit[meeting.duration] += 1
            continue
        outcome = env.apply_decision(meeting, slot, ACTION_SCHEDULE)
        if outcome is Outcome.BOOKED:
            scheduled += 1
        if stats is not None:
            stats.ask_counts[slot] += 1
            if outcome is Outcome.BOOKED:
                stats.booked[meeting.duration] += 1
            else:
                stats.pushback_reject[meeting.duration] += 1
    if stats is not None:
        if drain:
            stats.drain_timesteps += 1
        else:
            stats.arrival_timesteps += 1
            stats.scheduled_arrival_phase += scheduled
    env.end_timestep(arrivals=(not drain) if arrivals is None else arrivals)
    return scheduled


def run_baseline_episode(
    env: SchedulingEnv,
    kind: str,
    rng: Optional[np.random.Generator] = None,
    *,
    episode: int,
    arrival_timesteps: int = 50,
    drain_cap: int = 200,
) -> EpisodeStats:
    """Same episode shape as the learning path: arrivals then a bounded drain."""
    stats = EpisodeStats(episode=episode)
    if env.timestep == 0 and not env.waiting and not env.backlog:
        env.sample_arrivals()
        env.refill_waiting()
    for timestep in range(arrival_timesteps):
        run_baseline_timestep(
            env, kind, rng, drain=False, arrivals=timestep < arrival_timesteps - 1, stats=stats
        )
    drained = 0
    while (env.backlog or env.waiting) and drained < drain_cap:
        run_baseline_timestep(env, kind, rng, drain=True, stats=stats)
        drained += 1
    if env.backlog or env.waiting:
        stats.incomplete = True
    return stats
