"""Episode orchestration: state encoding, exploratory decisions, rewards, replay.

One timestep walks the waiting queue in FIFO order. The environment proposes a
first-fit slot for each meeting; the agent then takes the binary
schedule-or-defer decision. A meeting with no feasible slot is pushed back
without an agent decision. Delayed rewards compare the timestep's bookings to
the benchmark; immediate rewards reflect individual participant responses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .calendar import DESIGNATIONS, NUM_SLOTS, SENIOR, Meeting, day_band
from .environment import (
    ACTION_DEFER,
    ACTION_SCHEDULE,
    DURATION_VALUES,
    Outcome,
    SchedulingEnv,
    backlog_vector,
    compute_benchmark,
)
from .policy import Experience, PolicyNet

STATE_SIZE = 135
MAX_DURATION = 6

REWARD_DELAYED = "delayed"
REWARD_IMMEDIATE = "immediate"
REWARD_COMBINED = "combined"
REWARD_MODES = (REWARD_DELAYED, REWARD_IMMEDIATE, REWARD_COMBINED)

DEFAULT_EPSILON = 0.1
DEFAULT_ARRIVAL_TIMESTEPS = 50
DEFAULT_DRAIN_CAP = 200
BUFFER_RETENTION = 20


def encode_state(
    grid,
    waiting: Sequence[Meeting],
    backlog_len: int,
    proposed_slot: Optional[int],
    meeting: Meeting,
) -> np.ndarray:
    """135-vector: occupancy ++ proposal one-hot ++ day band ++ durations ++ backlog ++ designation."""
    vec = np.zeros(STATE_SIZE)
    vec[0:NUM_SLOTS] = grid.occupancy
    if proposed_slot is not None:
        vec[NUM_SLOTS + proposed_slot] = 1.0
    band = day_band(grid.day_cursor)
    vec[2 * NUM_SLOTS + band.start : 2 * NUM_SLOTS + band.stop] = 1.0
    base = 3 * NUM_SLOTS
    for i, m in enumerate(list(waiting)[:7]):
        vec[base + i] = m.duration / MAX_DURATION
    vec[base + 7 : base + 12] = backlog_vector(backlog_len)
    vec[base + 12 + DESIGNATIONS.index(meeting.designation)] = 1.0
    return vec


def select_action(distribution: np.ndarray, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-uniform exploration over the policy's softmax distribution."""
    if rng.random() < epsilon:
        return int(rng.integers(2))
    return ACTION_SCHEDULE if rng.random() < distribution[0] else ACTION_DEFER


def assign_delayed_rewards(
    experiences: Sequence[Experience], benchmark: int, meetings_scheduled: int
) -> None:
    """Add the timestep-level +-1 to every decision of the timestep."""
    delta = 1.0 if meetings_scheduled >= benchmark else -1.0
    for e in experiences:
        e.reward += delta


@dataclass
class ReplayBuffer:
    """Positively rewarded timesteps from the most recent `retention` episodes."""

    retention: int = BUFFER_RETENTION
    entries: list[tuple[int, list[Experience]]] = field(default_factory=list)

    def push(self, episode: int, experiences: list[Experience]) -> None:
        self.entries.append((episode, experiences))

    def evict(self, current_episode: int) -> None:
        cutoff = current_episode - self.retention
        self.entries = [e for e in self.entries if e[0] > cutoff]

    def experiences(self) -> list[Experience]:
        return [x for _, exps in self.entries for x in exps]

    def episode_span(self) -> int:
        if not self.entries:
            return 0
        episodes = [ep for ep, _ in self.entries]
        return max(episodes) - min(episodes)


@dataclass
class EpisodeStats:
    """Per-episode counters backing the stats CSV."""

    episode: int
    arrival_timesteps: int = 0
    scheduled_arrival_phase: int = 0
    benchmark_hits: int = 0
    ask_counts: np.ndarray = field(default_factory=lambda: np.zeros(NUM_SLOTS, dtype=np.int64))
    ask_counts_senior: np.ndarray = field(default_factory=lambda: np.zeros(NUM_SLOTS, dtype=np.int64))
    ask_counts_other: np.ndarray = field(default_factory=lambda: np.zeros(NUM_SLOTS, dtype=np.int64))
    pushback_nofit: dict[int, int] = field(default_factory=lambda: {d: 0 for d in DURATION_VALUES})
    pushback_reject: dict[int, int] = field(default_factory=lambda: {d: 0 for d in DURATION_VALUES})
    pushback_defer: dict[int, int] = field(default_factory=lambda: {d: 0 for d in DURATION_VALUES})
    presented: dict[int, int] = field(default_factory=lambda: {d: 0 for d in DURATION_VALUES})
    booked: dict[int, int] = field(default_factory=lambda: {d: 0 for d in DURATION_VALUES})
    drain_timesteps: int = 0
    incomplete: bool = False

    @property
    def avg_meetings_per_timestep(self) -> float:
        if self.arrival_timesteps == 0:
            return 0.0
        return self.scheduled_arrival_phase / self.arrival_timesteps

    @property
    def benchmark_hit_rate(self) -> float:
        if self.arrival_timesteps == 0:
            return 0.0
        return self.benchmark_hits / self.arrival_timesteps

    def pushback_total(self, duration: int) -> int:
        return (
            self.pushback_nofit[duration]
            + self.pushback_reject[duration]
            + self.pushback_defer[duration]
        )

    def forced_pushback_rate(self, duration: int) -> float:
        """Pushbacks the agent did not choose (no fit or rejection) per presentation."""
        if self.presented[duration] == 0:
            return 0.0
        forced = self.pushback_nofit[duration] + self.pushback_reject[duration]
        return forced / self.presented[duration]


def run_timestep(
    env: SchedulingEnv,
    policy: PolicyNet,
    rng: np.random.Generator,
    *,
    reward_mode: str = REWARD_DELAYED,
    epsilon: float = DEFAULT_EPSILON,
    episode: int = 0,
    timestep: int = 0,
    drain: bool = False,
    arrivals: Optional[bool] = None,
    stats: Optional[EpisodeStats] = None,
) -> tuple[list[Experience], int]:
    """Decide every waiting meeting, then rotate the day, take arrivals, refill.

    Returns the timestep's experiences (rewards already assigned per
    `reward_mode`) and the number of meetings booked. `arrivals` defaults to
    "not drain"; an arrival-phase timestep may disable it so an episode's last
    arrivals are not sampled into the drain.
    """
    if reward_mode not in REWARD_MODES:
        raise ValueError(f"reward_mode must be one of {REWARD_MODES}")
    # A benchmark above the decidable queue size is unsatisfiable and would
    # punish every action indiscriminately, so the reward target is capped at
    # the number of meetings actually up for decision this timestep.
    benchmark = min(compute_benchmark(env.grid, env.waiting), len(env.waiting))
    experiences: list[Experience] = []
    scheduled = 0
    for _ in range(len(env.waiting)):
        meeting = env.waiting[0]
        if stats is not None:
            stats.presented[meeting.duration] += 1
        slot = env.grid.find_first_fit(meeting.duration)
        if slot is None:
            env.waiting.popleft()
            env.backlog.append(meeting)
            if stats is not None:
                stats.pushback_nofit[meeting.duration] += 1
            continue
        state = encode_state(env.grid, env.waiting, len(env.backlog), slot, meeting)
        action = select_action(policy.forward(state), epsilon, rng)
        env.waiting.popleft()
        outcome = env.apply_decision(meeting, slot, action)
        immediate = 0.0
        if reward_mode in (REWARD_IMMEDIATE, REWARD_COMBINED):
            if outcome is Outcome.BOOKED:
                immediate = 1.0
            elif outcome is Outcome.REJECTED:
                immediate = -1.0
        experiences.append(
            Experience(
                state=state,
                action=action,
                reward=immediate,
                episode=episode,
                timestep=timestep,
                meeting_id=meeting.id,
                duration=meeting.duration,
                proposed_slot=slot,
                designation=meeting.designation,
                outcome=outcome.value,
                drain=drain,
            )
        )
        if outcome is Outcome.BOOKED:
            scheduled += 1
        if stats is not None:
            if action == ACTION_SCHEDULE:
                # asks are counted at the proposal indicator, i.e. the start slot
                stats.ask_counts[slot] += 1
                if meeting.designation == SENIOR:
                    stats.ask_counts_senior[slot] += 1
                else:
                    stats.ask_counts_other[slot] += 1
            if outcome is Outcome.BOOKED:
                stats.booked[meeting.duration] += 1
            elif outcome is Outcome.REJECTED:
                stats.pushback_reject[meeting.duration] += 1
            else:
                stats.pushback_defer[meeting.duration] += 1
    if reward_mode in (REWARD_DELAYED, REWARD_COMBINED):
        assign_delayed_rewards(experiences, benchmark, scheduled)
    if stats is not None and not drain:
        stats.arrival_timesteps += 1
        stats.scheduled_arrival_phase += scheduled
        if scheduled >= benchmark:
            stats.benchmark_hits += 1
    elif stats is not None:
        stats.drain_timesteps += 1
    env.end_timestep(arrivals=(not drain) if arrivals is None else arrivals)
    return experiences, scheduled


def run_episode(
    env: SchedulingEnv,
    policy: PolicyNet,
    buffer: ReplayBuffer,
    rng: np.random.Generator,
    *,
    episode: int,
    reward_mode: str = REWARD_DELAYED,
    epsilon: float = DEFAULT_EPSILON,
    arrival_timesteps: int = DEFAULT_ARRIVAL_TIMESTEPS,
    drain_cap: int = DEFAULT_DRAIN_CAP,
    train: bool = True,
    per_timestep_updates: bool = False,
) -> EpisodeStats:
    """Arrival timesteps, then a bounded drain, then policy updates.

    Only arrival-phase timesteps train the policy: the drain exists to finish
    the episode's bookkeeping, and its tail of near-empty queues carries
    degenerate reward targets. Positively rewarded arrival timesteps (reward
    sum > 0) enter the replay buffer; entries older than the retention window
    are evicted. With the default episode-end cadence, one update trains on
    the buffer contents plus this episode's negatively rewarded experiences.
    With per-timestep updates each timestep trains on its own rewarded
    decisions immediately and nothing is replayed, so every decision is
    trained exactly once. Exceeding the drain cap marks the episode
    incomplete instead of aborting.
    """
    stats = EpisodeStats(episode=episode)
    episode_experiences: list[Experience] = []
    if env.timestep == 0 and not env.waiting and not env.backlog:
        # fresh environment: fill the waiting queue before the first decision
        env.sample_arrivals()
        env.refill_waiting()
    timestep = 0
    for _ in range(arrival_timesteps):
        experiences, _ = run_timestep(
            env,
            policy,
            rng,
            reward_mode=reward_mode,
            epsilon=epsilon,
            episode=episode,
            timestep=timestep,
            drain=False,
            arrivals=timestep < arrival_timesteps - 1,
            stats=stats,
        )
        _absorb(experiences, episode, buffer, episode_experiences)
        if per_timestep_updates and train:
            policy.reinforce_update(experiences)
        timestep += 1
    drained = 0
    while (env.backlog or env.waiting) and drained < drain_cap:
        run_timestep(
            env,
            policy,
            rng,
            reward_mode=reward_mode,
            epsilon=epsilon,
            episode=episode,
            timestep=timestep,
            drain=True,
            stats=stats,
        )
        timestep += 1
        drained += 1
    if env.backlog or env.waiting:
        stats.incomplete = True
    buffer.evict(episode)
    if train and not per_timestep_updates:
        negatives = [e for e in episode_experiences if e.reward < 0]
        policy.reinforce_update(buffer.experiences() + negatives)
    return stats


def _absorb(
    experiences: list[Experience],
    episode: int,
    buffer: ReplayBuffer,
    episode_experiences: list[Experience],
) -> None:
    episode_experiences.extend(experiences)
    if experiences and sum(e.reward for e in experiences) > 0:
        buffer.push(episode, experiences)
