"""Command-line entry points for the experiment pipeline.

Exit codes: 0 on success, 1 on configuration/validation errors, 2 on runtime
failures.
"""

import json
import sys

import click
from sklearn.base import clone

from .attack import load_fake_profiles
from .defense import PCADetector, detection_to_csv, evaluate_under_defense
from .errors import ConfigError, EmptyDatasetError, ParseError, RecPoisonError
from .evaluation import evaluate_transfer, report_to_csv, report_to_json
from .experiment import (
    ExperimentConfig,
    _apply_env_overrides,
    build_victims,
    fit_attacks,
    planned_stages,
    poisoned_landscape,
    prepare_data,
    run_experiment,
    run_timing_comparison,
    save_attacks,
)
from .interactions import append_fake_users, dataset_stats, save_triplets
from .landscape import grid_metadata_to_json, grid_to_csv, sharpness_score

_VALIDATION_ERRORS = (ConfigError, ParseError, EmptyDatasetError, ValueError)


def _load_config(path, seed):
    config = ExperimentConfig.from_json(path)
    if seed is not None:
        for section in ("split", "targets"):
            config.data[section]["seed"] = seed
        config.data["attack"]["seed"] = seed
        config.data["eval_seed"] = seed
        config.data["landscape"]["seed"] = seed
    return config


def _stage(fn):
    """Run a stage body, mapping failures onto the documented exit codes."""
    try:
        fn()
    except _VALIDATION_ERRORS as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(1)
    except RecPoisonError as exc:
        click.echo(f"runtime failure: {exc}", err=True)
        sys.exit(2)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
        sys.exit(2)


def _common(f):
    f = click.option("--config", "config_path", required=True, type=click.Path(exists=True))(f)
    f = click.option("--seed", type=int, default=None, help="override every stage seed")(f)
    f = click.option("--threads", type=int, default=None)(f)
    f = click.option("--out", "out_dir", type=click.Path(), default=None)(f)
    return f


@click.group()
def main():
    """Poisoning-attack experiments on implicit-feedback recommenders."""


@main.command()
@_common
def ingest(config_path, seed, threads, out_dir):
    """Load, preprocess and split the dataset; write split CSVs and stats."""

    def body():
        config = _load_config(config_path, seed)
        out, _ = _apply_env_overrides(config, out_dir, threads)
        m, split, targets, _ = prepare_data(config)
        for part in ("train", "validation", "test"):
            save_triplets(getattr(split, part), out / "data" / f"{part}.csv")
        stats = dataset_stats(m)
        (out / "data").mkdir(parents=True, exist_ok=True)
        with open(out / "data" / "stats.json", "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "num_users": stats.num_users,
                    "num_items": stats.num_items,
                    "num_interactions": stats.num_interactions,
                    "avg_items_per_user": stats.avg_items_per_user,
                    "density": stats.density,
                },
                fh,
                indent=2,
            )
            fh.write("\n")
        with open(out / "data" / "targets.json", "w", encoding="utf-8") as fh:
            json.dump({"target_items": [int(t) for t in targets]}, fh, indent=2)
            fh.write("\n")
        click.echo(
            f"ingested {stats.num_users} users, {stats.num_items} items, "
            f"{stats.num_interactions} interactions -> {out / 'data'}"
        )

    _stage(body)


@main.command()
@_common
def attack(config_path, seed, threads, out_dir):
    """Fit the configured attackers and persist their fake profiles."""

    def body():
        config = _load_config(config_path, seed)
        out, _ = _apply_env_overrides(config, out_dir, threads)
        _, split, targets, groups = prepare_data(config)
        attacks, meta = fit_attacks(config, split, targets, groups)
        save_attacks(config, attacks, meta, out)
        for name, profiles in attacks.items():
            if profiles is not None:
                click.echo(f"{name}: {profiles.num_fake} fake users -> {out / 'attacks' / name}")

    _stage(body)


def _load_saved_attacks(config, out):
    attacks = {}
    for name in config.data["attackers"]:
        if name == "clean":
            attacks["clean"] = None
            continue
        csv_path = out / "attacks" / name / "profiles.csv"
        sidecar = out / "attacks" / name / "profiles.json"
        if not csv_path.exists():
            raise ConfigError(
                f"no saved profiles for attacker {name!r} under {out / 'attacks'}; run the attack stage first"
            )
        attacks[name], _ = load_fake_profiles(csv_path, sidecar)
    return attacks


@main.command()
@_common
def evaluate(config_path, seed, threads, out_dir):
    """Retrain victims on saved fake profiles and write the transfer report."""

    def body():
        config = _load_config(config_path, seed)
        out, n_threads = _apply_env_overrides(config, out_dir, threads)
        _, split, targets, groups = prepare_data(config)
        attacks = _load_saved_attacks(config, out)
        report = evaluate_transfer(
            split,
            attacks,
            build_victims(config),
            targets,
            metrics=tuple(config.data["metrics"]),
            ks=tuple(config.data["ks"]),
            repeats=config.data["repeats"],
            seed=config.data["eval_seed"],
            groups=groups,
            threads=n_threads,
        )
        report.config_fingerprint = config.fingerprint()
        report_to_csv(report, out / "reports" / "transfer.csv")
        report_to_json(report, out / "reports" / "transfer.json")
        click.echo(f"wrote {len(report.rows)} rows -> {out / 'reports' / 'transfer.csv'}")

    _stage(body)


@main.command()
@_common
def landscape(config_path, seed, threads, out_dir):
    """Grid the attack loss around surrogates trained on saved poisoned data."""

    def body():
        config = _load_config(config_path, seed)
        out, _ = _apply_env_overrides(config, out_dir, threads)
        _, split, targets, groups = prepare_data(config)
        attacks = _load_saved_attacks(config, out)
        for name, profiles in attacks.items():
            if profiles is None:
                continue
            grid = poisoned_landscape(config, split, profiles, targets, groups)
            grid_to_csv(grid, out / "landscape" / f"{name}.csv")
            grid_metadata_to_json(grid, out / "landscape" / f"{name}.json", extra={"attacker": name})
            click.echo(f"{name}: sharpness={sharpness_score(grid):.6g}")

    _stage(body)


@main.command()
@_common
def defend(config_path, seed, threads, out_dir):
    """Run the PCA detector on saved poisoned data and re-evaluate victims."""

    def body():
        config = _load_config(config_path, seed)
        out, n_threads = _apply_env_overrides(config, out_dir, threads)
        _, split, targets, groups = prepare_data(config)
        attacks = _load_saved_attacks(config, out)
        frac = config.data["defense"]["remove_fraction"]
        if frac is None:
            frac = min(0.5, 2.0 * config.data["attack"]["delta"])
        detector = PCADetector(
            components=config.data["defense"]["components"],
            remove_fraction=frac,
            seed=config.data["eval_seed"],
        )
        for name, profiles in attacks.items():
            if profiles is None:
                continue
            poisoned = append_fake_users(split.train, profiles.discrete)
            result = clone(detector).detect(poisoned)
            detection_to_csv(result, out / "defense" / f"{name}_detection.csv")
        report = evaluate_under_defense(
            split,
            attacks,
            build_victims(config),
            targets,
            detector,
            metrics=tuple(config.data["metrics"]),
            ks=tuple(config.data["ks"]),
            repeats=config.data["repeats"],
            seed=config.data["eval_seed"],
            groups=groups,
            threads=n_threads,
        )
        report.config_fingerprint = config.fingerprint()
        report_to_csv(report, out / "reports" / "defended.csv")
        report_to_json(report, out / "reports" / "defended.json")
        click.echo(f"wrote defended report -> {out / 'reports' / 'defended.csv'}")

    _stage(body)


@main.command()
@_common
@click.option("--dry-run", is_flag=True, help="validate the config and print the stage plan")
def run(config_path, seed, threads, out_dir, dry_run):
    """Run the full pipeline: ingest, attack, evaluate, diagnose, manifest."""

    def body():
        config = _load_config(config_path, seed)
        config.validate()
        if dry_run:
            click.echo("config ok; planned stages:")
            for stage in planned_stages(config):
                click.echo(f"  {stage}")
            return
        report, manifest = run_experiment(config, out_dir=out_dir, threads=threads)
        click.echo(f"complete: {len(report.rows)} report rows, manifest hash {manifest['manifest_hash'][:16]}")

    _stage(body)


@main.command()
@_common
def timing(config_path, seed, threads, out_dir):
    """Time the backbone vs the sharpness-aware attack under shared seeds."""

    def body():
        config = _load_config(config_path, seed)
        out, _ = _apply_env_overrides(config, out_dir, threads)
        timings = run_timing_comparison(config, out_dir=out)
        for name in ("backbone", "sharpap"):
            t = timings[name]
            click.echo(
                f"{name}: total {t['total_seconds']:.2f}s, "
                f"fastest outer iteration {t['min_iteration_seconds']:.3f}s"
            )
        click.echo(f"overhead (fastest iteration): {timings['overhead_percent']:.2f}%")

    _stage(body)


if __name__ == "__main__":
    main()
