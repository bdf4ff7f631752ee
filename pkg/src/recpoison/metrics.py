"""Top-k ranking metrics over per-user recommendation lists.

All metrics consume ranked item-index arrays (one per evaluated user) and a
target item set; fake users must never be among the evaluated users.
"""

import numpy as np


def _check_recs(recommendations):
    if len(recommendations) == 0:
        raise ValueError("cannot compute a metric over an empty user set")


def hit_ratio_at_k(recommendations, targets, k):
    """Fraction of users with at least one target in their top-k."""
    _check_recs(recommendations)
    targets = set(int(t) for t in np.asarray(targets).ravel())
    hits = sum(1 for rec in recommendations if targets & set(map(int, rec[:k])))
    return hits / len(recommendations)


def ndcg_at_k(recommendations, targets, k):
    """Rank-discounted target gain normalized by the ideal placement.

    Targets carry relevance 1, everything else 0; DCG uses 1/log2(rank+1)
    with 1-based ranks.
    """
    _check_recs(recommendations)
    targets = set(int(t) for t in np.asarray(targets).ravel())
    ideal_hits = min(len(targets), k)
    idcg = sum(1.0 / np.log2(i + 1) for i in range(1, ideal_hits + 1))
    total = 0.0
    for rec in recommendations:
        dcg = sum(
            1.0 / np.log2(rank + 1)
            for rank, item in enumerate(rec[:k], start=1)
            if int(item) in targets
        )
        total += dcg / idcg
    return total / len(recommendations)


def group_difference(recommendations, users, targets, groups, k):
    """Hit-rate gap between group 0 and group 1 (D@K = H_U0 - H_U1)."""
    users = np.asarray(users, dtype=np.int64)
    if len(recommendations) != users.size:
        raise ValueError("recommendations and users must align")
    in_g0 = np.isin(users, groups.group0)
    in_g1 = np.isin(users, groups.group1)
    if not in_g0.any() or not in_g1.any():
        raise ValueError("both groups must be represented among evaluated users")
    recs0 = [rec for rec, flag in zip(recommendations, in_g0) if flag]
    recs1 = [rec for rec, flag in zip(recommendations, in_g1) if flag]
    return hit_ratio_at_k(recs0, targets, k) - hit_ratio_at_k(recs1, targets, k)
