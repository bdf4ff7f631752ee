import csv
import json

import numpy as np
import pytest

from recpoison.attack.profiles import init_fake_profiles
from recpoison.evaluation import (
    evaluate_transfer,
    evaluation_users,
    report_to_csv,
    report_to_json,
)
from recpoison.interactions import UserGroups, split_dataset
from recpoison.models import WRMF

from conftest import make_matrix


@pytest.fixture
def medium_split():
    rng = np.random.default_rng(0)
    rows = [sorted(rng.choice(20, size=int(rng.integers(4, 9)), replace=False)) for _ in range(30)]
    m = make_matrix(rows, num_items=20)
    return split_dataset(m, seed=1)


def small_victims():
    return {"wrmf": WRMF(factors=4, steps=40, learning_rate=0.02, init_std=0.05)}


def test_clean_row_always_emitted(medium_split):
    fp = init_fake_profiles(2, 20, [3], 5, seed=0)
    report = evaluate_transfer(
        medium_split, {"random": fp}, small_victims(), [3], metrics=("hr",), ks=(5,), repeats=2, seed=9
    )
    attackers = {row.attacker for row in report.rows}
    assert attackers == {"clean", "random"}


def test_report_deterministic(medium_split):
    fp = init_fake_profiles(2, 20, [3], 5, seed=0)
    kwargs = dict(metrics=("hr", "ndcg"), ks=(5, 10), repeats=3, seed=9)
    a = evaluate_transfer(medium_split, {"x": fp}, small_victims(), [3], **kwargs)
    b = evaluate_transfer(medium_split, {"x": fp}, small_victims(), [3], **kwargs)
    for ra, rb in zip(a.rows, b.rows):
        assert (ra.attacker, ra.victim, ra.metric, ra.k, ra.mean, ra.std) == (
            rb.attacker, rb.victim, rb.metric, rb.k, rb.mean, rb.std
        )


def test_threads_do_not_change_results(medium_split):
    fp = init_fake_profiles(2, 20, [3], 5, seed=0)
    kwargs = dict(metrics=("hr",), ks=(5,), repeats=3, seed=9)
    a = evaluate_transfer(medium_split, {"x": fp}, small_victims(), [3], threads=1, **kwargs)
    b = evaluate_transfer(medium_split, {"x": fp}, small_victims(), [3], threads=4, **kwargs)
    assert [r.values for r in a.rows] == [r.values for r in b.rows]


def test_eval_users_are_real_test_users(medium_split):
    users = evaluation_users(medium_split)
    assert all(medium_split.test.rows[u].size > 0 for u in users)
    assert users.max() < medium_split.train.num_users  # no fake index can appear


def test_divergent_victim_marks_failed(medium_split):
    bad = {"wrmf": WRMF(factors=4, steps=300, learning_rate=50.0)}
    report = evaluate_transfer(
        medium_split, {}, bad, [3], metrics=("hr",), ks=(5,), repeats=2, seed=9
    )
    assert all(row.failed for row in report.rows)
    assert all(np.isnan(v) for row in report.rows for v in row.values)


def test_group_metric(medium_split):
    groups = UserGroups(np.arange(15), np.arange(15, 30))
    report = evaluate_transfer(
        medium_split, {}, small_victims(), [3],
        metrics=("diff",), ks=(5,), repeats=1, seed=9, groups=groups,
    )
    row = report.rows[0]
    assert row.metric == "diff"
    assert -1.0 <= row.mean <= 1.0


def test_diff_requires_groups(medium_split):
    with pytest.raises(ValueError, match="groups"):
        evaluate_transfer(medium_split, {}, small_victims(), [3], metrics=("diff",), ks=(5,), repeats=1)


def test_csv_and_json_writers(medium_split, tmp_path):
    report = evaluate_transfer(
        medium_split, {}, small_victims(), [3], metrics=("hr",), ks=(5,), repeats=2, seed=9
    )
    report.config_fingerprint = "abc123"
    csv_path = tmp_path / "report.csv"
    json_path = tmp_path / "report.json"
    report_to_csv(report, csv_path)
    report_to_json(report, json_path)
    with open(csv_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["attacker", "victim", "metric", "K", "mean", "std"]
    assert len(rows) == len(report.rows) + 1
    payload = json.loads(json_path.read_text())
    assert payload["config_fingerprint"] == "abc123"
    assert len(payload["rows"][0]["values"]) == 2


def test_metric_bounds(medium_split):
    fp = init_fake_profiles(2, 20, [3], 5, seed=0)
    report = evaluate_transfer(
        medium_split, {"a": fp}, small_victims(), [3],
        metrics=("hr", "ndcg"), ks=(5, 10), repeats=2, seed=3,
    )
    for row in report.rows:
        assert 0.0 <= row.mean <= 1.0
