"""Command line entry points: experiments, dataset generation, gradient checks, REPL."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .config import EXPERIMENTS, ConfigError, default_config, load_config, resolve_output_dir


@click.group()
def main() -> None:
    """Meeting-scheduling simulator, learners, and experiment runner."""


@main.command(name="run")
@click.argument("config_file")
@click.option("--out", type=click.Path(path_type=Path), default=None, help="Override the output directory.")
@click.option("--seed", type=int, default=None, help="Override the master seed.")
@click.option("--record-workload", type=click.Path(path_type=Path), default=None,
              help="Write the generated arrivals to a replay file.")
@click.option("--workload", type=click.Path(path_type=Path, exists=True), default=None,
              help="Replay arrivals from a file instead of sampling.")
@click.option("--figures/--no-figures", default=True, show_default=True,
              help="Render PNG figures alongside the CSV output.")
def run_cmd(config_file: str, out, seed, record_workload, workload, figures: bool) -> None:
    """Run an experiment from a JSON config file (or a built-in name like obj1)."""
    from .experiments import run_experiment

    try:
        if config_file in EXPERIMENTS:
            config = resolve_output_dir(default_config(config_file))
        else:
            config = load_config(config_file)
        if seed is not None:
            config.seed = seed
        if out is not None:
            config.output_dir = out
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        result = run_experiment(
            config,
            record_workload=record_workload,
            workload=workload,
            render_figures=figures,
        )
    except OSError as exc:
        raise click.ClickException(f"I/O error: {exc}") from exc
    click.echo(f"experiment: {config.experiment} (seed {config.seed}, {config.episodes} episodes)")
    for path in result.csv_files:
        click.echo(f"wrote {path}")
    for path in result.figure_files:
        click.echo(f"wrote {path}")
    if result.rl_stats:
        from .experiments import mean_avg_meetings, window_stats

        click.echo(
            "avg meetings/timestep "
            f"first50={mean_avg_meetings(result.rl_stats[:50]):.3f} "
            f"window={mean_avg_meetings(window_stats(result.rl_stats)):.3f}"
        )
    if result.mapper_metrics:
        for m in result.mapper_metrics:
            click.echo(
                f"mapper {m.loss_mode}/{m.output_mode}: "
                f"P={m.precision:.4f} R={m.recall:.4f} F1={m.f1:.4f} ({m.epochs} epochs)"
            )


@main.command(name="gen-dataset")
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--seed", type=int, default=7, show_default=True)
def gen_dataset_cmd(out_dir: Path, seed: int) -> None:
    """Generate the template time-phrase dataset splits into OUT_DIR."""
    from .phrases import generate_dataset, load_phrase_table, write_dataset

    rng = np.random.default_rng(np.random.SeedSequence(seed))
    table = load_phrase_table()
    train, valid, test = generate_dataset(table, rng)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_dataset(out_dir / "train.tsv", train)
    write_dataset(out_dir / "valid.tsv", valid)
    write_dataset(out_dir / "test.tsv", test)
    click.echo(f"wrote {len(train)}/{len(valid)}/{len(test)} samples to {out_dir}")


@main.command(name="grad-check")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", type=int, default=200, show_default=True,
              help="Parameter coordinates to probe per model.")
def grad_check_cmd(seed: int, samples: int) -> None:
    """Verify policy and mapper backprop against central finite differences."""
    from .mapper import MapperConfig, MapperModel
    from .policy import Experience, PolicyNet

    rng = np.random.default_rng(seed)
    policy = PolicyNet(seed=seed)
    batch = [
        Experience(state=rng.random(135), action=int(rng.integers(2)), reward=float(rng.choice([-1.0, 1.0])))
        for _ in range(8)
    ]
    policy_err = policy.gradient_check(batch, rng=rng, n_samples=samples)
    click.echo(f"policy max relative error: {policy_err:.3e}")

    vocab = {f"w{i}": i for i in range(12)}
    mapper = MapperModel(vocab, MapperConfig(hidden_size=16, fc_size=12, seed=seed))
    ids = rng.integers(0, 12, size=(4, 6))
    labels = (rng.random((4, 40)) < 0.2).astype(float)
    mapper_err = mapper.gradient_check(ids, labels, rng=rng, n_samples=samples)
    click.echo(f"mapper max relative error: {mapper_err:.3e}")

    threshold = 1e-4
    if policy_err >= threshold or mapper_err >= threshold:
        click.echo(f"FAIL: error above {threshold}")
        sys.exit(1)
    click.echo(f"OK: both below {threshold}")


@main.command(name="repl")
@click.argument("mapper_ckpt", type=click.Path(exists=True, path_type=Path))
@click.argument("policy_ckpt", type=click.Path(exists=True, path_type=Path), required=False)
@click.option("--seed", type=int, default=7, show_default=True)
@click.option("--designation", type=click.Choice(["junior", "mid", "senior"]), default="junior",
              show_default=True, help="Designation of the initiating user.")
@click.option("--duration", type=click.Choice(["1", "2", "4", "6"]), default="1", show_default=True)
@click.option("--ask", is_flag=True, help="Type participant replies instead of simulating them.")
@click.option("--uncomfortable", default="", help="Comma-separated slots participants dislike.")
def repl_cmd(mapper_ckpt: Path, policy_ckpt, seed: int, designation: str, duration: str,
             ask: bool, uncomfortable: str) -> None:
    """Interactive scheduling dialogue using a trained mapper (and optional policy)."""
    from .checkpoint import load_checkpoint
    from .environment import LoadBand, ParticipantProfile, SchedulingEnv, load_user_directory
    from .mapper import MapperModel
    from .policy import PolicyNet
    from .repl import run_repl

    meta, arrays = load_checkpoint(mapper_ckpt)
    if meta.get("kind") != "mapper":
        raise click.UsageError(f"{mapper_ckpt} is not a mapper checkpoint")
    mapper = MapperModel.from_arrays(meta, arrays)
    policy = None
    if policy_ckpt is not None:
        pmeta, parrays = load_checkpoint(policy_ckpt)
        if pmeta.get("kind") != "policy":
            raise click.UsageError(f"{policy_ckpt} is not a policy checkpoint")
        policy = PolicyNet.from_arrays(pmeta, parrays)
    slots = frozenset(int(s) for s in uncomfortable.split(",") if s.strip())
    env = SchedulingEnv(
        np.random.default_rng(seed),
        LoadBand(0, 0),
        profile=ParticipantProfile(uncomfortable_slots=slots),
    )
    run_repl(
        mapper,
        env,
        policy,
        directory=load_user_directory(),
        input_stream=sys.stdin,
        output=sys.stdout,
        designation=designation,
        duration=int(duration),
        typed_replies=ask,
    )


if __name__ == "__main__":
    main()
