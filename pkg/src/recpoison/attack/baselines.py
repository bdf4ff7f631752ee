"""Heuristic fake-profile constructions used as attack baselines."""

import numpy as np
from sklearn.base import BaseEstimator

from ..validation import check_item_set, check_seed
from .profiles import FakeProfiles, fake_user_count


def _resolve_profile_size(profile_size, m):
    if profile_size is not None:
        return int(profile_size)
    stats_avg = m.num_interactions / m.num_users if m.num_users else 0.0
    return max(1, int(round(stats_avg)))


class _HeuristicAttack(BaseEstimator):
    def fit(self, R, target_items):
        targets = check_item_set(target_items, R.num_items, name="target_items")
        n_fake = fake_user_count(self.delta, R.num_users)
        size = _resolve_profile_size(self.profile_size, R)
        if size < targets.size:
            raise ValueError(f"profile size {size} cannot hold {targets.size} targets")
        rng = check_seed(self.seed)
        rows = np.zeros((n_fake, R.num_items))
        rows[:, targets] = 1.0
        for u in range(n_fake):
            fill = self._fillers(R, targets, size - targets.size, rng)
            rows[u, fill] = 1.0
        self.profiles_ = FakeProfiles(rows.copy(), rows, targets, size).validate()
        return self


class RandomProfileAttack(_HeuristicAttack):
    """Fake users interact with the targets plus uniformly random items."""

    def __init__(self, delta=0.01, profile_size=None, seed=0):
        self.delta = delta
        self.profile_size = profile_size
        self.seed = seed

    def _fillers(self, R, targets, budget, rng):
        pool = np.setdiff1d(np.arange(R.num_items), targets)
        return rng.choice(pool, size=min(budget, pool.size), replace=False)


class PopularProfileAttack(_HeuristicAttack):
    """Targets plus ~10% globally popular items, the rest uniformly random."""

    def __init__(self, delta=0.01, profile_size=None, popular_fraction=0.1, seed=0):
        self.delta = delta
        self.profile_size = profile_size
        self.popular_fraction = popular_fraction
        self.seed = seed

    def _fillers(self, R, targets, budget, rng):
        if budget == 0:
            return np.empty(0, np.int64)
        counts = R.item_counts()
        pool = np.setdiff1d(np.arange(R.num_items), targets)
        n_pop = min(int(np.ceil(self.popular_fraction * budget)), pool.size)
        by_popularity = pool[np.lexsort((pool, -counts[pool]))]
        popular = by_popularity[:n_pop]
        rest_pool = np.setdiff1d(pool, popular)
        n_rand = min(budget - n_pop, rest_pool.size)
        random_fill = rng.choice(rest_pool, size=n_rand, replace=False)
        return np.concatenate([popular, random_fill])
