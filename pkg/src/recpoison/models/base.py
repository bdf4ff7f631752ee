"""Shared estimator plumbing for the embedding-based recommenders."""

import numpy as np
from sklearn.base import BaseEstimator

from ..interactions import InteractionMatrix
from ..validation import check_dense_interactions, check_user_indices


def as_dense(R):
    """Accept an InteractionMatrix or dense array in [0, 1], return float64."""
    if isinstance(R, InteractionMatrix):
        return R.to_dense()
    return check_dense_interactions(R)


def topk_from_scores(scores, k, exclude=None):
    """Ranked top-k item lists from a score matrix.

    Ties break toward the lower item index; ``exclude`` is a per-row list of
    item-index arrays removed from the candidate pool. When fewer than k
    candidates remain, all remaining items are returned ranked.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n_rows, n_items = scores.shape
    out = []
    for r in range(n_rows):
        s = scores[r]
        if exclude is not None and len(exclude[r]):
            s = s.copy()
            s[np.asarray(exclude[r], dtype=np.int64)] = -np.inf
        order = np.argsort(-s, kind="stable")
        valid = np.isfinite(s[order])
        order = order[valid]
        out.append(order[: min(k, order.size)])
    return out


class ImplicitRecommender(BaseEstimator):
    """Base class: score by embedding dot products, recommend top-k.

    Subclasses implement ``fit`` and set ``params_`` (an EmbeddingParams);
    models that score through a transformation override ``scoring_params``.
    """

    def scoring_params(self):
        return self.params_

    def predict_scores(self, users=None):
        p = self.scoring_params()
        if users is None:
            return p.user_emb @ p.item_emb.T
        users = check_user_indices(users, p.num_users)
        return p.user_emb[users] @ p.item_emb.T

    def recommend_topk(self, k, exclude=None, users=None):
        """Top-k recommendation lists, excluding each user's known items.

        ``exclude`` may be an InteractionMatrix (its rows are dropped from the
        candidates) or a per-user list of item arrays aligned with ``users``.
        """
        scores = self.predict_scores(users=users)
        if isinstance(exclude, InteractionMatrix):
            idx = range(exclude.num_users) if users is None else users
            exclude = [exclude.rows[u] for u in idx]
        return topk_from_scores(scores, k, exclude=exclude)
