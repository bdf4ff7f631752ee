"""Config-driven experiment pipeline: ingest, attack, evaluate, diagnose.

A single JSON config describes the whole run; every artifact lands under the
output directory and is listed in a manifest keyed by the config fingerprint,
so identical configs and seeds reproduce byte-identical reports.

Config schema (JSON object; defaults in parentheses):

  dataset:
    kind: "csv" | "synthetic" ("csv")
    path: interaction file, required for csv
    format: "triplet-csv" | "rating-csv" ("triplet-csv")
    binarize_threshold: rating cutoff or null (null)
    k_core: minimum interactions for the k-core filter, 0 disables (0)
    num_users / num_items / avg_items / seed: synthetic generator knobs
  split: {ratios: [7, 1, 2], seed: 0}
  targets: {count: 5, band: "uniform" | "popular" | "unpopular", seed: 0}
  groups: {attribute_path: null}        # enables the group objective / D@K
  attack:
    delta (0.01), profile_size (null = dataset average), epsilon (0.05),
    outer_lr (1.0), outer_iters (10), objective ("full_user"),
    group_topk (10), unroll_steps (null = full), seed (0),
    surrogate: WRMF keyword args
  attackers: subset of ["clean", "random", "popular", "backbone", "sharpap"]
  victims: {name: {model: "wrmf" | "bpr" | "lightgcn", ...kwargs}}
  metrics: ["hr", "ndcg"] (+ "diff" with groups)
  ks: [10, 20]
  repeats (10), eval_seed (0)
  landscape: {enabled: false, seed: 0, points: 20, half_range: 10.0}
  defense: {enabled: false, components: 3, remove_fraction: null = 2*delta}
  output_dir: "runs/experiment"
  threads (1)

Environment overrides: RECPOISON_OUT (output_dir), RECPOISON_THREADS.
"""

import copy
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .attack import (
    PopularProfileAttack,
    RandomProfileAttack,
    SharpAPAttack,
    attack_loss_theta,
    full_user_loss,
    group_loss,
    save_fake_profiles,
)
from .datasets import synthetic_interactions
from .defense import PCADetector, evaluate_under_defense
from .errors import ConfigError
from .evaluation import evaluate_transfer, report_to_csv, report_to_json
from .interactions import (
    binarize_explicit,
    group_users,
    k_core_filter,
    load_interactions,
    load_ratings,
    sample_target_items,
    save_triplets,
    split_dataset,
)
from .landscape import grid_metadata_to_json, grid_to_csv, loss_landscape_grid, sharpness_score
from .models import BPR, WRMF, LightGCN

_VICTIM_MODELS = {"wrmf": WRMF, "bpr": BPR, "lightgcn": LightGCN}
_ATTACKER_NAMES = ("clean", "random", "popular", "backbone", "sharpap")

_DEFAULTS = {
    "dataset": {
        "kind": "csv",
        "path": None,
        "format": "triplet-csv",
        "binarize_threshold": None,
        "k_core": 0,
        "num_users": 600,
        "num_items": 400,
        "avg_items": 20,
        "seed": 0,
    },
    "split": {"ratios": [7, 1, 2], "seed": 0},
    "targets": {"count": 5, "band": "uniform", "seed": 0},
    "groups": {"attribute_path": None},
    "attack": {
        "delta": 0.01,
        "profile_size": None,
        "epsilon": 0.05,
        "outer_lr": 1.0,
        "outer_iters": 10,
        "objective": "full_user",
        "group_topk": 10,
        "unroll_steps": None,
        "seed": 0,
        "surrogate": {},
    },
    "attackers": ["clean", "random", "popular", "backbone", "sharpap"],
    "victims": {
        "wrmf": {"model": "wrmf"},
        "bpr": {"model": "bpr"},
        "lightgcn": {"model": "lightgcn"},
    },
    "metrics": ["hr", "ndcg"],
    "ks": [10, 20],
    "repeats": 10,
    "eval_seed": 0,
    "landscape": {"enabled": False, "seed": 0, "points": 20, "half_range": 10.0},
    "defense": {"enabled": False, "components": 3, "remove_fraction": None},
    "output_dir": "runs/experiment",
    "threads": 1,
}


def _merge(defaults, overrides, prefix=""):
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        if key not in defaults:
            raise ConfigError(f"unknown config field {prefix}{key}")
        if isinstance(defaults[key], dict) and key not in ("victims", "surrogate"):
            if not isinstance(value, dict):
                raise ConfigError(f"{prefix}{key} must be an object")
            out[key] = _merge(defaults[key], value, prefix=f"{prefix}{key}.")
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class ExperimentConfig:
    data: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, raw):
        cfg = cls(data=_merge(_DEFAULTS, raw))
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return copy.deepcopy(self.data)

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def fingerprint(self):
        canonical = json.dumps(self.data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def validate(self):
        d = self.data
        ds = d["dataset"]
        if ds["kind"] not in ("csv", "synthetic"):
            raise ConfigError("dataset.kind must be 'csv' or 'synthetic'")
        if ds["kind"] == "csv" and not ds["path"]:
            raise ConfigError("dataset.path is required for csv datasets")
        if len(d["split"]["ratios"]) != 3:
            raise ConfigError("split.ratios must hold three values")
        if d["targets"]["count"] < 1:
            raise ConfigError("targets.count must be >= 1")
        if d["targets"]["band"] not in ("uniform", "popular", "unpopular"):
            raise ConfigError("targets.band must be uniform, popular or unpopular")
        atk = d["attack"]
        if atk["delta"] <= 0:
            raise ConfigError("attack.delta must be > 0")
        if atk["epsilon"] < 0:
            raise ConfigError("attack.epsilon must be >= 0")
        if atk["outer_iters"] < 1:
            raise ConfigError("attack.outer_iters must be >= 1")
        if atk["objective"] not in ("full_user", "group"):
            raise ConfigError("attack.objective must be full_user or group")
        if atk["objective"] == "group" and not d["groups"]["attribute_path"]:
            raise ConfigError("attack.objective=group requires groups.attribute_path")
        for name in d["attackers"]:
            if name not in _ATTACKER_NAMES:
                raise ConfigError(f"attackers: unknown attacker {name!r}")
        if not d["victims"]:
            raise ConfigError("victims must not be empty")
        for name, spec in d["victims"].items():
            if spec.get("model") not in _VICTIM_MODELS:
                raise ConfigError(f"victims.{name}.model must be one of {sorted(_VICTIM_MODELS)}")
        for metric in d["metrics"]:
            if metric not in ("hr", "ndcg", "diff"):
                raise ConfigError(f"metrics: unknown metric {metric!r}")
        if "diff" in d["metrics"] and not d["groups"]["attribute_path"]:
            raise ConfigError("metric 'diff' requires groups.attribute_path")
        if any(k < 1 for k in d["ks"]):
            raise ConfigError("ks must be positive")
        if d["repeats"] < 1:
            raise ConfigError("repeats must be >= 1")
        if d["threads"] < 1:
            raise ConfigError("threads must be >= 1")
        if d["landscape"]["points"] < 2:
            raise ConfigError("landscape.points must be >= 2")
        frac = d["defense"]["remove_fraction"]
        if frac is not None and not 0 < frac < 1:
            raise ConfigError("defense.remove_fraction must lie in (0, 1)")
        return self


def _apply_env_overrides(config, out_dir=None, threads=None):
    out = out_dir or os.environ.get("RECPOISON_OUT") or config.data["output_dir"]
    thr = threads or os.environ.get("RECPOISON_THREADS") or config.data["threads"]
    return Path(out), int(thr)


def load_dataset(config):
    ds = config.data["dataset"]
    if ds["kind"] == "synthetic":
        m = synthetic_interactions(
            num_users=ds["num_users"],
            num_items=ds["num_items"],
            avg_items=ds["avg_items"],
            seed=ds["seed"],
        )
    elif ds["binarize_threshold"] is not None:
        ratings = load_ratings(ds["path"])
        m = binarize_explicit(ratings, ds["binarize_threshold"])
    else:
        m = load_interactions(ds["path"], format=ds["format"])
    if ds["k_core"]:
        m = k_core_filter(m, ds["k_core"])
    return m


def build_surrogate(config):
    return WRMF(**config.data["attack"]["surrogate"])


def build_victims(config):
    victims = {}
    for name, spec in config.data["victims"].items():
        kwargs = {k: v for k, v in spec.items() if k != "model"}
        victims[name] = _VICTIM_MODELS[spec["model"]](**kwargs)
    return victims


def build_attacker(name, config, surrogate=None):
    atk = config.data["attack"]
    if name == "random":
        return RandomProfileAttack(
            delta=atk["delta"], profile_size=atk["profile_size"], seed=atk["seed"]
        )
    if name == "popular":
        return PopularProfileAttack(
            delta=atk["delta"], profile_size=atk["profile_size"], seed=atk["seed"]
        )
    if name in ("backbone", "sharpap"):
        return SharpAPAttack(
            surrogate=surrogate or build_surrogate(config),
            delta=atk["delta"],
            profile_size=atk["profile_size"],
            epsilon=0.0 if name == "backbone" else atk["epsilon"],
            outer_lr=atk["outer_lr"],
            outer_iters=atk["outer_iters"],
            objective=atk["objective"],
            group_topk=atk["group_topk"],
            unroll_steps=atk["unroll_steps"],
            seed=atk["seed"],
        )
    raise ConfigError(f"unknown attacker {name!r}")


def planned_stages(config):
    stages = ["ingest", "split", "targets", "attack", "evaluate"]
    if config.data["landscape"]["enabled"]:
        stages.append("landscape")
    if config.data["defense"]["enabled"]:
        stages.append("defend")
    stages.append("manifest")
    return stages


def prepare_data(config):
    """Shared front half of every stage: matrix, split, targets, groups."""
    m = load_dataset(config)
    split = split_dataset(m, tuple(config.data["split"]["ratios"]), config.data["split"]["seed"])
    groups = None
    if config.data["groups"]["attribute_path"]:
        groups = group_users(config.data["groups"]["attribute_path"], m)
    group_arg = groups.group0 if (groups is not None and config.data["targets"]["band"] != "uniform") else None
    targets = sample_target_items(
        split.train,
        count=config.data["targets"]["count"],
        band=config.data["targets"]["band"],
        group=group_arg,
        seed=config.data["targets"]["seed"],
    )
    return m, split, targets, groups


def fit_attacks(config, split, targets, groups=None):
    """Fit every configured attacker; returns (profiles by name, metadata)."""
    attacks, attack_meta = {}, {}
    for name in config.data["attackers"]:
        if name == "clean":
            attacks["clean"] = None
            continue
        attacker = build_attacker(name, config)
        if isinstance(attacker, SharpAPAttack):
            attacker.fit(split.train, targets, groups=groups)
            attack_meta[name] = {
                "attack_loss": [float(x) for x in attacker.attack_loss_history_],
                "sharp_loss": [float(x) for x in attacker.sharp_loss_history_],
            }
        else:
            attacker.fit(split.train, targets)
            attack_meta[name] = {}
        attacks[name] = attacker.profiles_
    return attacks, attack_meta


def save_attacks(config, attacks, attack_meta, out_dir, manifest=None):
    for name, profiles in attacks.items():
        if profiles is None:
            continue
        csv_path = Path(out_dir) / "attacks" / name / "profiles.csv"
        sidecar = Path(out_dir) / "attacks" / name / "profiles.json"
        save_fake_profiles(
            profiles,
            csv_path,
            sidecar,
            metadata={
                "attacker": name,
                "seed": config.data["attack"]["seed"],
                "config": {k: v for k, v in config.data["attack"].items() if k != "surrogate"},
                **attack_meta.get(name, {}),
            },
        )
        if manifest is not None:
            manifest.add(csv_path, "fake-profiles")
            manifest.add(sidecar, "fake-profiles-meta")


class _Manifest:
    def __init__(self, out_dir, config):
        self.out_dir = Path(out_dir)
        self.data = {
            "config_fingerprint": config.fingerprint(),
            "code_version": __version__,
            "seeds": {
                "split": config.data["split"]["seed"],
                "targets": config.data["targets"]["seed"],
                "attack": config.data["attack"]["seed"],
                "eval": config.data["eval_seed"],
                "landscape": config.data["landscape"]["seed"],
            },
            "outputs": [],
            "stages": {},
            "status": "running",
        }

    def add(self, path, kind):
        rel = str(Path(path).relative_to(self.out_dir))
        self.data["outputs"].append({"path": rel, "kind": kind})

    def stage(self, name, status, **info):
        self.data["stages"][name] = {"status": status, **info}
        self.write()

    def finish(self, status):
        self.data["status"] = status
        entries = json.dumps(self.data["outputs"], sort_keys=True)
        seeds = json.dumps(self.data["seeds"], sort_keys=True)
        self.data["manifest_hash"] = hashlib.sha256(
            (self.data["config_fingerprint"] + seeds + self.data["code_version"] + entries).encode()
        ).hexdigest()
        self.write()

    def write(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        with open(self.out_dir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _attack_objective_fn(config, targets, groups):
    kind = config.data["attack"]["objective"]
    k = config.data["attack"]["group_topk"]
    if kind == "group":
        return lambda s: group_loss(s, targets, groups, k)
    return lambda s: full_user_loss(s, targets)


def run_experiment(config, out_dir=None, seed_override=None, threads=None):
    """Execute the full pipeline; returns (EvalReport, manifest dict).

    A sub-stage failure is recorded in the manifest (partial completion) and
    re-raised for the CLI to map onto a nonzero exit code.
    """
    config.validate()
    if seed_override is not None:
        for section in ("split", "targets"):
            config.data[section]["seed"] = seed_override
        config.data["attack"]["seed"] = seed_override
        config.data["eval_seed"] = seed_override
        config.data["landscape"]["seed"] = seed_override
    out_dir, threads = _apply_env_overrides(config, out_dir, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    config.to_json(out_dir / "config.json")
    manifest = _Manifest(out_dir, config)
    manifest.add(out_dir / "config.json", "config")
    report = None
    try:
        # ingest + split + targets
        m, split, targets, groups = prepare_data(config)
        for part in ("train", "validation", "test"):
            path = out_dir / "data" / f"{part}.csv"
            save_triplets(getattr(split, part), path)
            manifest.add(path, "split")
        targets_path = out_dir / "data" / "targets.json"
        with open(targets_path, "w", encoding="utf-8") as fh:
            json.dump({"target_items": [int(t) for t in targets]}, fh, indent=2)
            fh.write("\n")
        manifest.add(targets_path, "targets")
        manifest.stage("ingest", "done", num_users=m.num_users, num_items=m.num_items,
                       num_interactions=m.num_interactions)

        # attacks
        attacks, attack_meta = fit_attacks(config, split, targets, groups)
        save_attacks(config, attacks, attack_meta, out_dir, manifest)
        manifest.stage("attack", "done", attackers=list(attacks))

        # evaluate
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
            threads=threads,
        )
        report.config_fingerprint = config.fingerprint()
        csv_path = out_dir / "reports" / "transfer.csv"
        json_path = out_dir / "reports" / "transfer.json"
        report_to_csv(report, csv_path)
        report_to_json(report, json_path)
        manifest.add(csv_path, "report")
        manifest.add(json_path, "report-provenance")
        manifest.stage("evaluate", "done", rows=len(report.rows))

        # landscape diagnostics on gradient attackers
        if config.data["landscape"]["enabled"]:
            scores = {}
            for name in ("backbone", "sharpap"):
                if attacks.get(name) is None:
                    continue
                grid = poisoned_landscape(config, split, attacks[name], targets, groups)
                g_csv = out_dir / "landscape" / f"{name}.csv"
                g_json = out_dir / "landscape" / f"{name}.json"
                grid_to_csv(grid, g_csv)
                grid_metadata_to_json(grid, g_json, extra={"attacker": name})
                manifest.add(g_csv, "landscape")
                manifest.add(g_json, "landscape-meta")
                scores[name] = sharpness_score(grid)
            manifest.stage("landscape", "done", sharpness=scores)

        # defense evaluation
        if config.data["defense"]["enabled"]:
            frac = config.data["defense"]["remove_fraction"]
            if frac is None:
                frac = min(0.5, 2.0 * config.data["attack"]["delta"])
            detector = PCADetector(
                components=config.data["defense"]["components"],
                remove_fraction=frac,
                seed=config.data["eval_seed"],
            )
            defended = evaluate_under_defense(
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
                threads=threads,
            )
            defended.config_fingerprint = config.fingerprint()
            d_csv = out_dir / "reports" / "defended.csv"
            d_json = out_dir / "reports" / "defended.json"
            report_to_csv(defended, d_csv)
            report_to_json(defended, d_json)
            manifest.add(d_csv, "report-defended")
            manifest.add(d_json, "report-defended-provenance")
            manifest.stage("defend", "done")
    except Exception as exc:
        manifest.stage("error", "failed", error=f"{type(exc).__name__}: {exc}")
        manifest.finish("partial")
        raise
    manifest.finish("complete")
    return report, manifest.data


def poisoned_landscape(config, split, profiles, targets, groups=None):
    """Train the surrogate on an attacker's poisoned data and grid the
    attack loss around the optimum with seeded shared directions."""
    surrogate = build_surrogate(config)
    poisoned = np.vstack([split.train.to_dense(), profiles.discrete])
    surrogate.fit(poisoned)
    theta = surrogate.params_
    n_real = split.train.num_users
    objective = _attack_objective_fn(config, targets, groups)

    def loss_fn(flat):
        return attack_loss_theta(theta.like(flat), n_real, objective)[0]

    return loss_landscape_grid(
        theta.flatten(),
        loss_fn,
        seed=config.data["landscape"]["seed"],
        points=config.data["landscape"]["points"],
        half_range=config.data["landscape"]["half_range"],
    )


def run_timing_comparison(config, out_dir=None, rounds=2):
    """Wall-clock comparison of the backbone (eps = 0) vs the sharpness-aware
    attack under identical seeds; returns the timing report dict.

    Each arm runs ``rounds`` times in alternating order, and the headline
    overhead compares the fastest outer iteration either arm achieved:
    competing processes can only inflate a wall-clock sample, so interleaved
    per-arm minima estimate the uncontended cost. Totals and per-iteration
    medians are reported alongside.
    """
    config.validate()
    _, split, targets, groups = prepare_data(config)
    # untimed warm-up with the full attack footprint (trajectory included) so
    # allocator and BLAS spin-up costs land on neither timed arm
    warmup = build_attacker("backbone", config)
    warmup.set_params(outer_iters=1)
    warmup.fit(split.train, targets, groups=groups)

    iteration_times = {"backbone": [], "sharpap": []}
    totals = {"backbone": [], "sharpap": []}
    losses = {}
    order = ("backbone", "sharpap")
    for round_idx in range(max(1, rounds)):
        for name in (order if round_idx % 2 == 0 else order[::-1]):
            attacker = build_attacker(name, config)
            start = time.perf_counter()
            attacker.fit(split.train, targets, groups=groups)
            totals[name].append(time.perf_counter() - start)
            iteration_times[name].extend(attacker.iteration_seconds_)
            losses[name] = float(attacker.attack_loss_history_[-1])
    timings = {}
    for name in order:
        iters = np.asarray(iteration_times[name])
        timings[name] = {
            "total_seconds": float(min(totals[name])),
            "per_outer_iteration": float(min(totals[name])) / config.data["attack"]["outer_iters"],
            "median_iteration_seconds": float(np.median(iters)),
            "min_iteration_seconds": float(iters.min()),
            "final_attack_loss": losses[name],
        }
    base = timings["backbone"]["min_iteration_seconds"]
    sharp = timings["sharpap"]["min_iteration_seconds"]
    timings["overhead_percent"] = 100.0 * (sharp - base) / base
    base_total = timings["backbone"]["total_seconds"]
    sharp_total = timings["sharpap"]["total_seconds"]
    timings["overhead_percent_total"] = 100.0 * (sharp_total - base_total) / base_total
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "timing.json", "w", encoding="utf-8") as fh:
            json.dump(timings, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return timings
