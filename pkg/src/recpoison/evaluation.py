"""Victim retraining on poisoned data and transferability reporting."""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import clone

from .errors import DivergenceError
from .interactions import append_fake_users
from .metrics import group_difference, hit_ratio_at_k, ndcg_at_k

METRIC_NAMES = ("hr", "ndcg", "diff")


@dataclass
class EvalRow:
    attacker: str
    victim: str
    metric: str
    k: int
    mean: float
    std: float
    values: list
    failed: bool = False


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)
    seeds: dict = field(default_factory=dict)
    config_fingerprint: str = ""

    def value(self, attacker, victim, metric, k):
        for row in self.rows:
            if (row.attacker, row.victim, row.metric, row.k) == (attacker, victim, metric, k):
                return row.mean
        raise KeyError((attacker, victim, metric, k))


def victim_seed(base_seed, victim_index, repeat):
    """Deterministic per-retrain seed, independent of the attacker."""
    return int(base_seed) * 1000003 + victim_index * 9176 + repeat * 31 + 1


def evaluation_users(split):
    """Real users carrying at least one held-out test interaction."""
    return np.array(
        [u for u in range(split.test.num_users) if split.test.rows[u].size > 0],
        dtype=np.int64,
    )


def _retrain_and_rank(template, seed, train_matrix, eval_users, exclude_rows, max_k):
    victim = clone(template)
    victim.set_params(seed=seed)
    victim.fit(train_matrix)
    return victim.recommend_topk(max_k, exclude=exclude_rows, users=eval_users)


def evaluate_transfer(
    split,
    attacks,
    victims,
    targets,
    metrics=("hr", "ndcg"),
    ks=(10, 20),
    repeats=10,
    seed=0,
    groups=None,
    threads=1,
    include_clean=True,
):
    """Retrain every victim on every attacker's poisoned data; report metrics.

    ``attacks`` maps attacker name to FakeProfiles (or None for the clean
    control, which is always included). Victims retrain from fresh seeded
    initializations, one distinct seed per repeat; metrics average over the
    real users present in the test split and exclude their training items
    from the ranked lists. A diverging retrain marks its rows failed instead
    of aborting the report.
    """
    for m in metrics:
        if m not in METRIC_NAMES:
            raise ValueError(f"unknown metric {m!r}")
    if "diff" in metrics and groups is None:
        raise ValueError("metric 'diff' requires user groups")
    attacks = dict(attacks)
    if include_clean:
        attacks.setdefault("clean", None)
    eval_users = evaluation_users(split)
    if eval_users.size == 0:
        raise ValueError("no real users with test interactions")
    exclude_rows = [split.train.rows[u] for u in eval_users]
    max_k = max(ks)

    jobs = []
    for attacker, profiles in sorted(attacks.items()):
        if profiles is None:
            train_matrix = split.train
        else:
            train_matrix = append_fake_users(split.train, profiles.discrete)
        for v_idx, (victim_name, template) in enumerate(sorted(victims.items())):
            for rep in range(repeats):
                jobs.append(
                    (attacker, victim_name, rep,
                     template, victim_seed(seed, v_idx, rep), train_matrix)
                )

    def run(job):
        attacker, victim_name, rep, template, vseed, train_matrix = job
        try:
            recs = _retrain_and_rank(template, vseed, train_matrix, eval_users, exclude_rows, max_k)
            return (attacker, victim_name, rep, recs, None)
        except DivergenceError as exc:
            return (attacker, victim_name, rep, None, exc)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(job) for job in jobs]

    by_pair = {}
    for attacker, victim_name, rep, recs, err in results:
        by_pair.setdefault((attacker, victim_name), {})[rep] = (recs, err)

    report = EvalReport(seeds={"eval_seed": int(seed), "repeats": repeats})
    for (attacker, victim_name), repeats_map in sorted(by_pair.items()):
        for metric in metrics:
            for k in ks:
                values, failed = [], False
                for rep in range(repeats):
                    recs, err = repeats_map[rep]
                    if err is not None:
                        failed = True
                        values.append(float("nan"))
                        continue
                    if metric == "hr":
                        values.append(hit_ratio_at_k(recs, targets, k))
                    elif metric == "ndcg":
                        values.append(ndcg_at_k(recs, targets, k))
                    else:
                        values.append(group_difference(recs, eval_users, targets, groups, k))
                arr = np.asarray(values, dtype=np.float64)
                ok = arr[np.isfinite(arr)]
                report.rows.append(
                    EvalRow(
                        attacker=attacker,
                        victim=victim_name,
                        metric=metric,
                        k=k,
                        mean=float(ok.mean()) if ok.size else float("nan"),
                        std=float(ok.std()) if ok.size else float("nan"),
                        values=values,
                        failed=failed,
                    )
                )
    return report


def report_to_csv(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attacker", "victim", "metric", "K", "mean", "std"])
        for row in report.rows:
            writer.writerow(
                [row.attacker, row.victim, row.metric, row.k, f"{row.mean:.10g}", f"{row.std:.10g}"]
            )


def report_to_json(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "config_fingerprint": report.config_fingerprint,
        "seeds": report.seeds,
        "rows": [
            {
                "attacker": r.attacker,
                "victim": r.victim,
                "metric": r.metric,
                "k": r.k,
                "mean": r.mean,
                "std": r.std,
                "values": r.values,
                "failed": r.failed,
            }
            for r in report.rows
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
