"""Experiment runner: the four learning objectives, baselines, and the mapper.

Every experiment is a pure function of (config, master seed): the environment,
agent exploration and network initialisation draw from separate child streams
of the master seed, so repeated runs are byte-identical and a baselines run
with the same seed sees the same workload as the learning run.

Outputs are delimited CSV files plus rendered PNG figures, both written to the
config's output directory.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .baselines import BASELINE_KINDS, RANDOM, run_baseline_episode
from .calendar import NUM_SLOTS
from .checkpoint import save_checkpoint
from .config import ExperimentConfig, ScheduledBand
from .environment import DURATION_VALUES, LoadBand, ParticipantProfile, SchedulingEnv
from .mapper import (
    LOSS_SEPARATE,
    LOSS_SHARED,
    EpochMetrics,
    MapperConfig,
    MapperModel,
    evaluate,
    train_mapper,
)
from .phrases import build_vocab, generate_dataset, load_phrase_table, write_dataset
from .policy import PolicyNet
from .trainer import EpisodeStats, ReplayBuffer, run_episode

EXTRA_BAND_EPISODES = 300
PUSHBACK_BANDS = ((30.0, 70.0), (140.0, 160.0), (190.0, 210.0))
WINDOW_FRACTION = 0.2  # evaluation window: last 20% of episodes


@dataclass
class MapperRunMetrics:
    loss_mode: str
    output_mode: str
    bidirectional: bool
    precision: float
    recall: float
    f1: float
    epochs: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    csv_files: list[Path] = field(default_factory=list)
    figure_files: list[Path] = field(default_factory=list)
    rl_stats: Optional[list[EpisodeStats]] = None
    baseline_stats: Optional[dict[str, list[EpisodeStats]]] = None
    band_stats: Optional[dict[tuple[float, float], list[EpisodeStats]]] = None
    mapper_history: Optional[list[EpochMetrics]] = None
    mapper_metrics: Optional[list[MapperRunMetrics]] = None
    policy: Optional[PolicyNet] = None
    mapper: Optional[MapperModel] = None


def _seed_streams(master_seed: int) -> tuple[np.random.SeedSequence, np.random.Generator, int]:
    """(env seed sequence, agent generator, policy init seed) from one master seed."""
    root = np.random.SeedSequence(master_seed)
    env_ss, agent_ss, policy_ss = root.spawn(3)
    agent_rng = np.random.default_rng(agent_ss)
    policy_seed = int(policy_ss.generate_state(1)[0])
    return env_ss, agent_rng, policy_seed


def _make_env(
    env_ss: np.random.SeedSequence,
    band: LoadBand,
    profile: ParticipantProfile,
    record: bool = False,
    replay=None,
) -> SchedulingEnv:
    return SchedulingEnv(
        np.random.default_rng(env_ss),
        band,
        profile=profile,
        record=record,
        replay=replay,
    )


def _episode_env(
    config: ExperimentConfig,
    episode: int,
    env_children: list[np.random.SeedSequence],
    *,
    record: bool = False,
    replay=None,
    meetings_so_far: int = 0,
) -> SchedulingEnv:
    """Fresh per-episode environment; identical seeds give identical workloads."""
    profile = ParticipantProfile(
        uncomfortable_slots=config.slots_for(episode), senior_override=config.senior_override
    )
    return SchedulingEnv(
        np.random.default_rng(env_children[episode - 1]),
        config.band_for(episode),
        profile=profile,
        record=record,
        replay=replay,
        arrival_step_start=(episode - 1) * config.arrival_timesteps,
        id_start=meetings_so_far + 1,
    )


def run_rl_training(
    config: ExperimentConfig,
    *,
    env_ss: Optional[np.random.SeedSequence] = None,
    record_workload: bool = False,
    replay=None,
) -> tuple[PolicyNet, list[EpisodeStats], list]:
    """Train a policy for config.episodes, one fresh seeded environment per episode."""
    default_ss, agent_rng, policy_seed = _seed_streams(config.seed)
    env_ss = env_ss or default_ss
    env_children = env_ss.spawn(config.episodes)
    policy = PolicyNet(seed=policy_seed, learning_rate=config.learning_rate)
    buffer = ReplayBuffer()
    stats_list: list[EpisodeStats] = []
    recorded: list = []
    replay_stream = deque(replay) if replay else None
    meetings_so_far = 0
    for episode in range(1, config.episodes + 1):
        env = _episode_env(
            config,
            episode,
            env_children,
            record=record_workload,
            replay=replay_stream,
            meetings_so_far=meetings_so_far,
        )
        stats = run_episode(
            env,
            policy,
            buffer,
            agent_rng,
            episode=episode,
            reward_mode=config.reward_mode,
            epsilon=config.epsilon,
            arrival_timesteps=config.arrival_timesteps,
            per_timestep_updates=config.per_timestep_updates,
        )
        stats_list.append(stats)
        meetings_so_far += env.arrived_total
        if record_workload:
            recorded.extend(env.recorded)
    return policy, stats_list, recorded


def run_baselines(config: ExperimentConfig) -> dict[str, list[EpisodeStats]]:
    """Run each non-learning policy against the same seeded per-episode workloads."""
    results: dict[str, list[EpisodeStats]] = {}
    for kind in BASELINE_KINDS:
        env_ss, agent_rng, _ = _seed_streams(config.seed)
        env_children = env_ss.spawn(config.episodes)
        stats_list = []
        meetings_so_far = 0
        for episode in range(1, config.episodes + 1):
            env = _episode_env(config, episode, env_children, meetings_so_far=meetings_so_far)
            stats_list.append(
                run_baseline_episode(
                    env,
                    kind,
                    agent_rng if kind == RANDOM else None,
                    episode=episode,
                    arrival_timesteps=config.arrival_timesteps,
                )
            )
            meetings_so_far += env.arrived_total
        results[kind] = stats_list
    return results


# -- CSV emission --------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


STATS_HEADER = (
    ["episode", "avg_meetings_per_timestep", "benchmark_hit_rate"]
    + [f"ask_{i}" for i in range(NUM_SLOTS)]
    + [f"pushback_{d}" for d in DURATION_VALUES]
    + [f"nofit_{d}" for d in DURATION_VALUES]
    + [f"reject_{d}" for d in DURATION_VALUES]
    + [f"defer_{d}" for d in DURATION_VALUES]
    + [f"presented_{d}" for d in DURATION_VALUES]
    + [f"booked_{d}" for d in DURATION_VALUES]
    + ["drain_timesteps", "incomplete"]
)


def write_stats_csv(path: Path, stats_list: Sequence[EpisodeStats]) -> Path:
    rows = []
    for s in stats_list:
        row: list = [s.episode, s.avg_meetings_per_timestep, s.benchmark_hit_rate]
        row.extend(int(c) for c in s.ask_counts)
        row.extend(s.pushback_total(d) for d in DURATION_VALUES)
        row.extend(s.pushback_nofit[d] for d in DURATION_VALUES)
        row.extend(s.pushback_reject[d] for d in DURATION_VALUES)
        row.extend(s.pushback_defer[d] for d in DURATION_VALUES)
        row.extend(s.presented[d] for d in DURATION_VALUES)
        row.extend(s.booked[d] for d in DURATION_VALUES)
        row.append(s.drain_timesteps)
        row.append(s.incomplete)
        rows.append(row)
    return _write_csv(path, STATS_HEADER, rows)


def write_designation_csv(path: Path, stats_list: Sequence[EpisodeStats]) -> Path:
    header = (
        ["episode"]
        + [f"senior_ask_{i}" for i in range(NUM_SLOTS)]
        + [f"other_ask_{i}" for i in range(NUM_SLOTS)]
    )
    rows = []
    for s in stats_list:
        row: list = [s.episode]
        row.extend(int(c) for c in s.ask_counts_senior)
        row.extend(int(c) for c in s.ask_counts_other)
        rows.append(row)
    return _write_csv(path, header, rows)


def window_stats(stats_list: Sequence[EpisodeStats], fraction: float = WINDOW_FRACTION) -> list[EpisodeStats]:
    n = max(1, int(round(len(stats_list) * fraction)))
    return list(stats_list[-n:])


def mean_avg_meetings(stats_list: Sequence[EpisodeStats]) -> float:
    if not stats_list:
        return 0.0
    return float(np.mean([s.avg_meetings_per_timestep for s in stats_list]))


def pushback_rate_summary(stats_list: Sequence[EpisodeStats]) -> dict[int, dict[str, float]]:
    """Aggregate pushback causes per duration over an episode window."""
    out: dict[int, dict[str, float]] = {}
    for d in DURATION_VALUES:
        nofit = sum(s.pushback_nofit[d] for s in stats_list)
        reject = sum(s.pushback_reject[d] for s in stats_list)
        defer = sum(s.pushback_defer[d] for s in stats_list)
        presented = sum(s.presented[d] for s in stats_list)
        forced = nofit + reject
        out[d] = {
            "nofit": nofit,
            "reject": reject,
            "defer": defer,
            "presented": presented,
            "forced_rate": forced / presented if presented else 0.0,
        }
    return out


# -- experiment dispatch ----------------------------------------------------------


def run_experiment(
    config: ExperimentConfig,
    *,
    record_workload: Optional[Path] = None,
    workload: Optional[Path] = None,
    render_figures: bool = True,
) -> ExperimentResult:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.experiment == "mapper":
        return _run_mapper_experiment(config, out, render_figures)
    if config.experiment == "baselines":
        return _run_baselines_experiment(config, out, render_figures)
    return _run_rl_experiment(config, out, record_workload, workload, render_figures)


def _run_rl_experiment(
    config: ExperimentConfig,
    out: Path,
    record_workload: Optional[Path],
    workload: Optional[Path],
    render_figures: bool,
) -> ExperimentResult:
    from .environment import read_replay, write_replay

    replay = read_replay(workload) if workload else None
    policy, stats_list, recorded = run_rl_training(
        config, record_workload=record_workload is not None, replay=replay
    )
    result = ExperimentResult(config=config, rl_stats=stats_list, policy=policy)
    result.csv_files.append(write_stats_csv(out / "training_rl.csv", stats_list))
    save_checkpoint(out / "policy.ckpt", policy.meta(), policy.arrays())
    if record_workload is not None:
        write_replay(record_workload, recorded)

    if config.experiment == "obj1":
        result.band_stats = _pushback_band_runs(config)
        rows = []
        for (low, high), band_list in result.band_stats.items():
            summary = pushback_rate_summary(window_stats(band_list))
            for d in DURATION_VALUES:
                s = summary[d]
                rows.append(
                    [low, high, d, s["nofit"], s["reject"], s["defer"], s["presented"], s["forced_rate"]]
                )
        result.csv_files.append(
            _write_csv(
                out / "pushback_by_load.csv",
                ["band_low", "band_high", "duration", "nofit", "reject", "defer", "presented", "forced_rate"],
                rows,
            )
        )
    if config.experiment == "obj4":
        result.csv_files.append(write_designation_csv(out / "asks_by_designation.csv", stats_list))

    if render_figures:
        from . import figures

        result.figure_files = figures.render_rl_figures(config, result, out)
    return result


def _pushback_band_runs(config: ExperimentConfig) -> dict[tuple[float, float], list[EpisodeStats]]:
    """Shorter paired trainings across load bands for the pushback table."""
    root = np.random.SeedSequence(config.seed)
    band_children = root.spawn(len(PUSHBACK_BANDS) + 10)
    out: dict[tuple[float, float], list[EpisodeStats]] = {}
    for i, (low, high) in enumerate(PUSHBACK_BANDS):
        if (low, high) == (config.band_for(1).low_pct, config.band_for(1).high_pct):
            episodes = config.episodes
        else:
            episodes = min(config.episodes, EXTRA_BAND_EPISODES)
        band_config = ExperimentConfig(
            experiment=config.experiment,
            seed=config.seed,
            episodes=episodes,
            load_schedule=[ScheduledBand(1, episodes, LoadBand(low, high))],
            reward_mode=config.reward_mode,
            output_dir=config.output_dir,
            arrival_timesteps=config.arrival_timesteps,
            epsilon=config.epsilon,
            per_timestep_updates=config.per_timestep_updates,
            learning_rate=config.learning_rate,
        )
        _, stats_list, _ = run_rl_training(band_config, env_ss=band_children[3 + i])
        out[(low, high)] = stats_list
    return out


def _run_baselines_experiment(config: ExperimentConfig, out: Path, render_figures: bool) -> ExperimentResult:
    baseline_stats = run_baselines(config)
    result = ExperimentResult(config=config, baseline_stats=baseline_stats)
    for kind, stats_list in baseline_stats.items():
        result.csv_files.append(write_stats_csv(out / f"{kind}.csv", stats_list))
    rows = []
    for kind, stats_list in baseline_stats.items():
        rows.append(
            [
                kind,
                len(stats_list),
                mean_avg_meetings(stats_list),
                mean_avg_meetings(window_stats(stats_list)),
            ]
        )
    result.csv_files.append(
        _write_csv(
            out / "summary.csv",
            ["policy", "episodes", "mean_avg_meetings", "window_mean_avg_meetings"],
            rows,
        )
    )
    if render_figures:
        from . import figures

        result.figure_files = figures.render_baseline_figures(config, result, out)
    return result


def _run_mapper_experiment(config: ExperimentConfig, out: Path, render_figures: bool) -> ExperimentResult:
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    table = load_phrase_table()
    train, valid, test = generate_dataset(table, rng)
    write_dataset(out / "train.tsv", train)
    write_dataset(out / "valid.tsv", valid)
    write_dataset(out / "test.tsv", test)
    vocab = build_vocab(train)

    metrics: list[MapperRunMetrics] = []
    model, history = train_mapper(
        train, valid, MapperConfig(loss_mode=LOSS_SEPARATE, seed=config.seed), vocab=vocab
    )
    precision, recall, f1 = evaluate(model, test)
    metrics.append(
        MapperRunMetrics(LOSS_SEPARATE, model.config.output_mode, False, precision, recall, f1, len(history))
    )
    shared_model, shared_history = train_mapper(
        train, valid, MapperConfig(loss_mode=LOSS_SHARED, seed=config.seed), vocab=vocab
    )
    sp, sr, sf1 = evaluate(shared_model, test)
    metrics.append(
        MapperRunMetrics(LOSS_SHARED, shared_model.config.output_mode, False, sp, sr, sf1, len(shared_history))
    )

    result = ExperimentResult(
        config=config, mapper_history=history, mapper_metrics=metrics, mapper=model
    )
    result.csv_files.extend([out / "train.tsv", out / "valid.tsv", out / "test.tsv"])
    result.csv_files.append(
        _write_csv(
            out / "metrics.csv",
            ["epoch", "train_loss", "val_precision", "val_recall", "val_f1"],
            [[m.epoch, m.train_loss, m.val_precision, m.val_recall, m.val_f1] for m in history],
        )
    )
    result.csv_files.append(
        _write_csv(
            out / "comparison.csv",
            ["loss_mode", "output_mode", "bidirectional", "precision", "recall", "f1", "epochs"],
            [
                [m.loss_mode, m.output_mode, m.bidirectional, m.precision, m.recall, m.f1, m.epochs]
                for m in metrics
            ],
        )
    )
    save_checkpoint(out / "mapper.ckpt", model.meta(), model.arrays())
    if render_figures:
        from . import figures

        result.figure_files = figures.render_mapper_figures(config, result, out)
    return result
