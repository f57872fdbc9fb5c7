"""Checkpoint format: lossless round trips for policy and mapper."""

import numpy as np
import pytest

from slotsched.checkpoint import load_checkpoint, save_checkpoint
from slotsched.mapper import MapperConfig, MapperModel
from slotsched.policy import Experience, PolicyNet


def test_raw_array_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    arrays = {"W": rng.standard_normal((7, 5)), "b": rng.standard_normal(7)}
    meta = {"kind": "test", "note": "x"}
    path = tmp_path / "w.ckpt"
    save_checkpoint(path, meta, arrays)
    loaded_meta, loaded = load_checkpoint(path)
    assert loaded_meta == meta
    for key in arrays:
        assert (loaded[key] == arrays[key]).all()  # %.17g is exact for doubles


def test_policy_round_trip_preserves_behaviour(tmp_path):
    rng = np.random.default_rng(1)
    net = PolicyNet(seed=4)
    for _ in range(5):
        batch = [
            Experience(state=rng.random(135), action=int(rng.integers(2)), reward=1.0)
            for _ in range(4)
        ]
        net.reinforce_update(batch)
    path = tmp_path / "policy.ckpt"
    save_checkpoint(path, net.meta(), net.arrays())
    meta, arrays = load_checkpoint(path)
    restored = PolicyNet.from_arrays(meta, arrays)
    state = rng.random(135)
    assert (restored.forward(state) == net.forward(state)).all()
    assert restored.optimizer.step_count == net.optimizer.step_count
    # optimizer state carried over: identical further updates stay identical
    batch = [Experience(state=rng.random(135), action=0, reward=-1.0)]
    net.reinforce_update(batch)
    restored.reinforce_update(batch)
    for key in net.params:
        assert (net.params[key] == restored.params[key]).all()


def test_mapper_round_trip_embeds_vocab(tmp_path):
    vocab = {"<unk>": 0, "meet": 1, "monday": 2, "morning": 3}
    model = MapperModel(vocab, MapperConfig(hidden_size=8, fc_size=6, seed=2))
    path = tmp_path / "mapper.ckpt"
    save_checkpoint(path, model.meta(), model.arrays())
    meta, arrays = load_checkpoint(path)
    restored = MapperModel.from_arrays(meta, arrays)
    assert restored.vocab == vocab
    tokens = ["meet", "monday", "morning"]
    assert (restored.predict_probs(tokens) == model.predict_probs(tokens)).all()


def test_version_header_checked(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text("slotsched-ckpt 99\n{}\nend\n", encoding="utf-8")
    with pytest.raises(ValueError, match="version"):
        load_checkpoint(path)


def test_non_checkpoint_file_rejected(tmp_path):
    path = tmp_path / "random.txt"
    path.write_text("hello\n", encoding="utf-8")
    with pytest.raises(ValueError, match="not a checkpoint"):
        load_checkpoint(path)


def test_missing_end_marker_rejected(tmp_path):
    path = tmp_path / "trunc.ckpt"
    path.write_text('slotsched-ckpt 1\n{"kind": "x"}\narray b 2\n0 1\n', encoding="utf-8")
    with pytest.raises(ValueError, match="end marker"):
        load_checkpoint(path)


def test_policy_layer_size_mismatch_rejected(tmp_path):
    net = PolicyNet(seed=0)
    meta = net.meta()
    meta["layer_sizes"] = [10, 5, 2]
    with pytest.raises(ValueError, match="layer sizes"):
        PolicyNet.from_arrays(meta, net.arrays())
