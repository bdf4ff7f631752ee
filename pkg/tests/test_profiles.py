import itertools

import numpy as np
import pytest

from recpoison.attack.profiles import (
    FakeProfiles,
    fake_user_count,
    init_fake_profiles,
    load_fake_profiles,
    project_topn,
    save_fake_profiles,
)


def profiles_from_row(row, targets, n):
    row = np.asarray(row, dtype=np.float64)[None, :]
    return FakeProfiles(row, np.zeros_like(row), np.asarray(targets, np.int64), n)


def brute_force_projection(row, targets, n):
    """Independent oracle: enumerate every admissible support of size <= n.

    Must contain the targets; maximizes the summed continuous score of the
    chosen non-target items; ties prefer the lexicographically smallest
    index tuple.
    """
    items = [i for i in range(len(row)) if i not in set(targets)]
    budget = n - len(targets)
    best = None
    for combo in itertools.combinations(items, budget):
        score = sum(row[i] for i in combo)
        key = (-score, combo)
        if best is None or key < best[0]:
            best = (key, combo)
    support = np.zeros(len(row))
    support[list(targets)] = 1.0
    if best is not None:
        support[list(best[1])] = 1.0
    return support


class TestProjection:
    def test_top2_no_targets(self):
        fp = project_topn(profiles_from_row([0.9, 0.1, 0.5, 0.7], [], 2))
        assert list(np.flatnonzero(fp.discrete[0])) == [0, 3]

    def test_forced_target(self):
        fp = project_topn(profiles_from_row([0.9, 0.1, 0.5, 0.7], [1], 2))
        assert list(np.flatnonzero(fp.discrete[0])) == [0, 1]

    def test_all_equal_ties_by_index(self):
        fp = project_topn(profiles_from_row([0.5, 0.5, 0.5, 0.5], [], 2))
        assert list(np.flatnonzero(fp.discrete[0])) == [0, 1]

    def test_budget_smaller_than_targets_rejected(self):
        with pytest.raises(ValueError):
            project_topn(profiles_from_row([0.5, 0.5, 0.5], [0, 1, 2], 2))

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            row = rng.random(9)
            fp = project_topn(profiles_from_row(row, [2], 4))
            again = project_topn(fp)
            assert np.array_equal(fp.discrete, again.discrete)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(1)
        for trial in range(40):
            n_items = int(rng.integers(4, 13))
            row = np.round(rng.random(n_items), 3)
            n_targets = int(rng.integers(0, 3))
            targets = sorted(rng.choice(n_items, size=n_targets, replace=False))
            budget = int(rng.integers(n_targets, min(n_items, n_targets + 5)) or n_targets)
            if budget < n_targets:
                continue
            fp = project_topn(profiles_from_row(row, targets, budget))
            oracle = brute_force_projection(row, targets, budget)
            assert np.array_equal(fp.discrete[0], oracle), (row, targets, budget)

    def test_row_budget_invariant(self):
        rng = np.random.default_rng(2)
        cont = rng.random((5, 10))
        fp = FakeProfiles(cont, np.zeros_like(cont), [1, 7], 4)
        out = project_topn(fp).validate()
        assert (out.discrete.sum(axis=1) <= 4).all()
        assert out.discrete[:, [1, 7]].all()


class TestInitAndCounts:
    def test_init_targets_at_one(self):
        fp = init_fake_profiles(3, 8, [2, 5], 4, seed=0)
        assert (fp.continuous[:, [2, 5]] == 1.0).all()
        assert fp.continuous.max() <= 1.0
        others = np.delete(fp.continuous, [2, 5], axis=1)
        assert others.max() < 0.1
        fp.validate()

    def test_fake_user_count_floor(self):
        assert fake_user_count(0.01, 600) == 6
        assert fake_user_count(0.25, 8) == 2

    def test_fake_user_count_zero_rejected(self):
        with pytest.raises(ValueError):
            fake_user_count(0.01, 50)


class TestIo:
    def test_round_trip(self, tmp_path):
        fp = init_fake_profiles(2, 6, [1], 3, seed=4)
        csv = tmp_path / "profiles.csv"
        sidecar = tmp_path / "profiles.json"
        save_fake_profiles(fp, csv, sidecar, metadata={"seed": 4, "attack_loss": [1.0, 0.5]})
        back, meta = load_fake_profiles(csv, sidecar)
        assert np.array_equal(back.discrete, fp.discrete)
        assert list(back.target_items) == [1]
        assert meta["attack_loss"] == [1.0, 0.5]

    def test_csv_is_triplets_of_ones(self, tmp_path):
        fp = init_fake_profiles(1, 4, [0], 2, seed=1)
        csv = tmp_path / "p.csv"
        save_fake_profiles(fp, csv)
        lines = csv.read_text().strip().splitlines()
        assert lines[0] == "fake_user_index,item_index,value"
        assert all(line.endswith(",1") for line in lines[1:])
