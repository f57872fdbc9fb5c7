"""Render experiment figures to PNG files next to the CSV output."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .calendar import NUM_SLOTS
from .environment import DURATION_VALUES
from .trainer import EpisodeStats

ROLLING_WINDOW = 25


def _rolling_mean(values: Sequence[float], window: int = ROLLING_WINDOW) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.size <= window:
        return arr
    kernel = np.ones(window) / window
    return np.convolve(arr, kernel, mode="valid")


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_training_curve(stats_list: Sequence[EpisodeStats], path: Path, title: str) -> Path:
    episodes = [s.episode for s in stats_list]
    avg = [s.avg_meetings_per_timestep for s in stats_list]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(episodes, avg, color="tab:blue", alpha=0.25, label="per episode")
    smooth = _rolling_mean(avg)
    if smooth.size < len(episodes):
        ax.plot(episodes[len(episodes) - smooth.size :], smooth, color="tab:blue", label=f"rolling mean ({ROLLING_WINDOW})")
    ax.set_xlabel("episode")
    ax.set_ylabel("meetings scheduled per arrival timestep")
    ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def plot_pushback_by_load(
    band_summaries: dict[tuple[float, float], dict[int, dict[str, float]]], path: Path
) -> Path:
    bands = sorted(band_summaries)
    x = np.arange(len(bands))
    width = 0.2
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for i, d in enumerate(DURATION_VALUES):
        rates = [100.0 * band_summaries[b][d]["forced_rate"] for b in bands]
        ax.bar(x + (i - 1.5) * width, rates, width, label=f"{d}-slot")
    ax.set_xticks(x)
    ax.set_xticklabels([f"{int(lo)}-{int(hi)}%" for lo, hi in bands])
    ax.set_xlabel("arrival load")
    ax.set_ylabel("forced pushback rate (%)")
    ax.set_title("Meetings pushed back into the backlog, by duration and load")
    ax.legend()
    return _save(fig, path)


def plot_slot_asks(
    ask_counts: np.ndarray, path: Path, title: str, highlight: Sequence[int] = ()
) -> Path:
    fig, ax = plt.subplots(figsize=(10, 4))
    colors = ["tab:red" if i in set(highlight) else "tab:blue" for i in range(NUM_SLOTS)]
    ax.bar(np.arange(NUM_SLOTS), ask_counts, color=colors)
    ax.set_xlabel("slot")
    ax.set_ylabel("average asks per episode")
    ax.set_title(title)
    return _save(fig, path)


def plot_designation_asks(
    senior: np.ndarray, other: np.ndarray, path: Path, highlight: Sequence[int] = ()
) -> Path:
    x = np.arange(NUM_SLOTS)
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(x - 0.2, senior, width=0.4, label="senior initiator", color="tab:orange")
    ax.bar(x + 0.2, other, width=0.4, label="junior/mid initiator", color="tab:blue")
    for s in highlight:
        ax.axvline(s, color="tab:red", alpha=0.2, linewidth=6)
    ax.set_xlabel("slot")
    ax.set_ylabel("average asks per episode")
    ax.set_title("Asks on each slot by initiator designation (shaded: uncomfortable)")
    ax.legend()
    return _save(fig, path)


def plot_baseline_comparison(baseline_stats: dict[str, list[EpisodeStats]], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for kind, stats_list in sorted(baseline_stats.items()):
        avg = [s.avg_meetings_per_timestep for s in stats_list]
        smooth = _rolling_mean(avg)
        xs = range(len(avg) - smooth.size + 1, len(avg) + 1)
        ax.plot(list(xs), smooth, label=kind)
    ax.set_xlabel("episode")
    ax.set_ylabel("meetings scheduled per arrival timestep")
    ax.set_title("Fixed scheduling policies on the shared workload")
    ax.legend()
    return _save(fig, path)


def plot_mapper_history(history, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot([m.epoch for m in history], [m.val_f1 for m in history], label="validation micro-F1")
    ax.plot([m.epoch for m in history], [m.val_precision for m in history], label="precision", alpha=0.6)
    ax.plot([m.epoch for m in history], [m.val_recall for m in history], label="recall", alpha=0.6)
    ax.set_xlabel("epoch")
    ax.set_ylabel("score")
    ax.set_ylim(0, 1.02)
    ax.set_title("Slot mapper validation metrics")
    ax.legend()
    return _save(fig, path)


# -- per-experiment entry points -------------------------------------------------


def render_rl_figures(config, result, out: Path) -> list[Path]:
    from .experiments import pushback_rate_summary, window_stats

    paths = [
        plot_training_curve(
            result.rl_stats, out / "training_curve.png", f"{config.experiment}: scheduling throughput"
        )
    ]
    if config.experiment == "obj1" and result.band_stats:
        summaries = {
            band: pushback_rate_summary(window_stats(stats)) for band, stats in result.band_stats.items()
        }
        paths.append(plot_pushback_by_load(summaries, out / "pushback_by_load.png"))
    if config.experiment == "obj3":
        for idx, entry in enumerate(config.uncomfortable_schedule, start=1):
            phase = [
                s for s in result.rl_stats if entry.first_episode <= s.episode <= entry.last_episode
            ]
            tail = window_stats(phase)
            if not tail:
                continue
            mean_asks = np.mean([s.ask_counts for s in tail], axis=0)
            paths.append(
                plot_slot_asks(
                    mean_asks,
                    out / f"slot_asks_phase{idx}.png",
                    f"Asks per slot, late phase {idx} (uncomfortable: {sorted(entry.slots)})",
                    highlight=sorted(entry.slots),
                )
            )
    if config.experiment == "obj4":
        tail = window_stats(result.rl_stats)
        senior = np.mean([s.ask_counts_senior for s in tail], axis=0)
        other = np.mean([s.ask_counts_other for s in tail], axis=0)
        highlight = sorted(config.slots_for(config.episodes))
        paths.append(
            plot_designation_asks(senior, other, out / "asks_by_designation.png", highlight)
        )
    return paths


def render_baseline_figures(config, result, out: Path) -> list[Path]:
    return [plot_baseline_comparison(result.baseline_stats, out / "baseline_comparison.png")]


def render_mapper_figures(config, result, out: Path) -> list[Path]:
    return [plot_mapper_history(result.mapper_history, out / "mapper_metrics.png")]
