"""Experiment config parsing, validation, defaults, environment override."""

import json

import pytest

from slotsched.config import (
    OUTPUT_DIR_ENV,
    ConfigError,
    ExperimentConfig,
    ScheduledBand,
    ScheduledSlots,
    default_config,
    load_config,
)
from slotsched.environment import LoadBand


def write_config(tmp_path, payload):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return path


def test_defaults_exist_for_every_experiment():
    for name in ("obj1", "obj2", "obj3", "obj4", "baselines", "mapper"):
        config = default_config(name)
        assert config.experiment == name


def test_obj2_default_encodes_paper_switch_points():
    config = default_config("obj2")
    assert [(s.first_episode, s.last_episode) for s in config.load_schedule] == [
        (1, 1000),
        (1001, 2000),
        (2001, 2300),
    ]
    assert config.load_schedule[0].band.low_pct == 190
    assert config.load_schedule[1].band.low_pct == 30
    assert config.load_schedule[2].band.low_pct == 190


def test_obj3_default_switches_uncomfortable_sets():
    config = default_config("obj3")
    assert config.slots_for(1) == frozenset({5, 14, 26, 35})
    assert config.slots_for(config.episodes) == frozenset({2, 9})
    assert config.reward_mode == "immediate"


def test_band_and_slots_lookup_outside_schedule():
    config = default_config("obj1")
    assert config.slots_for(5) == frozenset()
    config2 = ExperimentConfig(experiment="obj1", load_schedule=[])
    assert config2.band_for(1).high_pct == 0


def test_load_config_round_trip(tmp_path):
    path = write_config(
        tmp_path,
        {
            "experiment": "obj1",
            "seed": 3,
            "episodes": 12,
            "load_schedule": [{"episodes": [1, 12], "low_pct": 100, "high_pct": 120}],
            "reward_mode": "delayed",
            "output_dir": str(tmp_path / "out"),
        },
    )
    config = load_config(path)
    assert config.seed == 3
    assert config.episodes == 12
    assert config.band_for(5).low_pct == 100


def test_unknown_field_named_in_error(tmp_path):
    path = write_config(tmp_path, {"experiment": "obj1", "episoods": 5})
    with pytest.raises(ConfigError, match="episoods"):
        load_config(path)


def test_missing_experiment_rejected(tmp_path):
    path = write_config(tmp_path, {"episodes": 5})
    with pytest.raises(ConfigError, match="experiment"):
        load_config(path)


def test_bad_reward_mode_rejected(tmp_path):
    path = write_config(tmp_path, {"experiment": "obj1", "reward_mode": "sometimes"})
    with pytest.raises(ConfigError, match="reward_mode"):
        load_config(path)


def test_overlapping_ranges_rejected():
    with pytest.raises(ConfigError, match="non-overlapping"):
        ExperimentConfig(
            experiment="obj1",
            load_schedule=[
                ScheduledBand(1, 10, LoadBand(50, 60)),
                ScheduledBand(5, 20, LoadBand(50, 60)),
            ],
        )


def test_out_of_range_slots_rejected():
    with pytest.raises(ConfigError, match="slots"):
        ExperimentConfig(
            experiment="obj3",
            uncomfortable_schedule=[ScheduledSlots(1, 5, frozenset({40}))],
        )


def test_inverted_range_rejected():
    with pytest.raises(ConfigError, match="inverted"):
        ExperimentConfig(
            experiment="obj1",
            load_schedule=[ScheduledBand(10, 5, LoadBand(50, 60))],
        )


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "elsewhere"))
    path = write_config(tmp_path, {"experiment": "obj1", "output_dir": "ignored"})
    config = load_config(path)
    assert str(config.output_dir) == str(tmp_path / "elsewhere" / "obj1")


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(path)
