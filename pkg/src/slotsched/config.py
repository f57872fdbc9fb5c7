"""Experiment configuration: JSON file format, validation, per-experiment defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .calendar import NUM_SLOTS
from .environment import LoadBand
from .trainer import REWARD_DELAYED, REWARD_IMMEDIATE, REWARD_MODES

EXPERIMENTS = ("obj1", "obj2", "obj3", "obj4", "baselines", "mapper")

OUTPUT_DIR_ENV = "SLOTSCHED_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the offending field."""


@dataclass
class ScheduledBand:
    """A load band active for an inclusive 1-based episode range."""

    first_episode: int
    last_episode: int
    band: LoadBand


@dataclass
class ScheduledSlots:
    """An uncomfortable-slot set active for an inclusive 1-based episode range."""

    first_episode: int
    last_episode: int
    slots: frozenset[int]


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int = 7
    episodes: int = 1000
    load_schedule: list[ScheduledBand] = field(default_factory=list)
    uncomfortable_schedule: list[ScheduledSlots] = field(default_factory=list)
    reward_mode: str = REWARD_DELAYED
    senior_override: bool = False
    output_dir: Path = Path("out")
    arrival_timesteps: int = 50
    epsilon: float = 0.1
    per_timestep_updates: bool = False
    learning_rate: float = 1e-3

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment: must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.reward_mode not in REWARD_MODES:
            raise ConfigError(f"reward_mode: must be one of {REWARD_MODES}")
        if self.episodes < 1:
            raise ConfigError("episodes: must be >= 1")
        _check_ranges("load_schedule", [(s.first_episode, s.last_episode) for s in self.load_schedule])
        _check_ranges(
            "uncomfortable_schedule",
            [(s.first_episode, s.last_episode) for s in self.uncomfortable_schedule],
        )
        for entry in self.uncomfortable_schedule:
            bad = [s for s in entry.slots if not 0 <= s < NUM_SLOTS]
            if bad:
                raise ConfigError(f"uncomfortable_schedule: slots out of range {bad}")
        self.output_dir = Path(self.output_dir)

    def band_for(self, episode: int) -> LoadBand:
        for entry in self.load_schedule:
            if entry.first_episode <= episode <= entry.last_episode:
                return entry.band
        return LoadBand(0, 0)

    def slots_for(self, episode: int) -> frozenset[int]:
        for entry in self.uncomfortable_schedule:
            if entry.first_episode <= episode <= entry.last_episode:
                return entry.slots
        return frozenset()


def _check_ranges(name: str, ranges: list[tuple[int, int]]) -> None:
    previous_end = 0
    for first, last in ranges:
        if first > last:
            raise ConfigError(f"{name}: episode range [{first}, {last}] is inverted")
        if first <= previous_end:
            raise ConfigError(f"{name}: episode ranges must be ordered and non-overlapping")
        previous_end = last


def default_config(experiment: str, seed: int = 7, output_dir: Optional[str | Path] = None) -> ExperimentConfig:
    """Built-in defaults reproducing the four learning objectives."""
    out = Path(output_dir) if output_dir is not None else Path("out") / experiment
    if experiment == "obj1":
        return ExperimentConfig(
            experiment="obj1",
            seed=seed,
            episodes=1000,
            load_schedule=[ScheduledBand(1, 1000, LoadBand(190, 210))],
            reward_mode=REWARD_DELAYED,
            output_dir=out,
        )
    if experiment == "obj2":
        return ExperimentConfig(
            experiment="obj2",
            seed=seed,
            episodes=2300,
            load_schedule=[
                ScheduledBand(1, 1000, LoadBand(190, 210)),
                ScheduledBand(1001, 2000, LoadBand(30, 70)),
                ScheduledBand(2001, 2300, LoadBand(190, 210)),
            ],
            reward_mode=REWARD_DELAYED,
            output_dir=out,
        )
    if experiment == "obj3":
        return ExperimentConfig(
            experiment="obj3",
            seed=seed,
            episodes=800,
            load_schedule=[ScheduledBand(1, 800, LoadBand(140, 160))],
            uncomfortable_schedule=[
                ScheduledSlots(1, 400, frozenset({5, 14, 26, 35})),
                ScheduledSlots(401, 800, frozenset({2, 9})),
            ],
            reward_mode=REWARD_IMMEDIATE,
            output_dir=out,
            per_timestep_updates=True,
        )
    if experiment == "obj4":
        return ExperimentConfig(
            experiment="obj4",
            seed=seed,
            episodes=500,
            load_schedule=[ScheduledBand(1, 500, LoadBand(140, 160))],
            uncomfortable_schedule=[ScheduledSlots(1, 500, frozenset({5, 14, 26, 35}))],
            reward_mode=REWARD_IMMEDIATE,
            senior_override=True,
            output_dir=out,
            per_timestep_updates=True,
        )
    if experiment == "baselines":
        return ExperimentConfig(
            experiment="baselines",
            seed=seed,
            episodes=1000,
            load_schedule=[ScheduledBand(1, 1000, LoadBand(190, 210))],
            output_dir=out,
        )
    if experiment == "mapper":
        return ExperimentConfig(experiment="mapper", seed=seed, episodes=1, output_dir=out)
    raise ConfigError(f"experiment: unknown experiment {experiment!r}")


def _parse_band_entry(entry: dict, name: str) -> ScheduledBand:
    try:
        first, last = entry["episodes"]
        return ScheduledBand(int(first), int(last), LoadBand(float(entry["low_pct"]), float(entry["high_pct"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: each entry needs episodes=[first,last], low_pct, high_pct") from exc


def _parse_slots_entry(entry: dict, name: str) -> ScheduledSlots:
    try:
        first, last = entry["episodes"]
        return ScheduledSlots(int(first), int(last), frozenset(int(s) for s in entry["slots"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: each entry needs episodes=[first,last], slots=[...]") from exc


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse a JSON config file; unknown keys are rejected by name."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config file: top level must be an object")
    if "experiment" not in raw:
        raise ConfigError("experiment: missing required field")
    known = {
        "experiment",
        "seed",
        "episodes",
        "load_schedule",
        "uncomfortable_schedule",
        "reward_mode",
        "senior_override",
        "output_dir",
        "arrival_timesteps",
        "epsilon",
        "per_timestep_updates",
        "learning_rate",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown config field")
    config = default_config(str(raw["experiment"]), seed=int(raw.get("seed", 7)))
    if "episodes" in raw:
        config.episodes = int(raw["episodes"])
    if "load_schedule" in raw:
        config.load_schedule = [_parse_band_entry(e, "load_schedule") for e in raw["load_schedule"]]
    if "uncomfortable_schedule" in raw:
        config.uncomfortable_schedule = [
            _parse_slots_entry(e, "uncomfortable_schedule") for e in raw["uncomfortable_schedule"]
        ]
    if "reward_mode" in raw:
        config.reward_mode = str(raw["reward_mode"])
    if "senior_override" in raw:
        config.senior_override = bool(raw["senior_override"])
    if "output_dir" in raw:
        config.output_dir = Path(str(raw["output_dir"]))
    if "arrival_timesteps" in raw:
        config.arrival_timesteps = int(raw["arrival_timesteps"])
    if "epsilon" in raw:
        config.epsilon = float(raw["epsilon"])
    if "per_timestep_updates" in raw:
        config.per_timestep_updates = bool(raw["per_timestep_updates"])
    if "learning_rate" in raw:
        config.learning_rate = float(raw["learning_rate"])
    config.__post_init__()  # re-validate after overrides
    return resolve_output_dir(config)


def resolve_output_dir(config: ExperimentConfig) -> ExperimentConfig:
    """Apply the output-directory environment override, when set."""
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        config.output_dir = Path(override) / config.experiment
    return config
