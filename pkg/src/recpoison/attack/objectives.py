"""Attack objectives over predicted score matrices, with exact gradients.

Both objectives consume the real-user block of the score matrix only; the
embedding-level wrapper lifts score gradients onto user/item factors.
"""

import numpy as np

from ..embeddings import EmbeddingParams
from ..models.base import topk_from_scores


def full_user_loss(scores, targets):
    """Negative log-probability of the targets under per-user softmax.

    loss = -sum_t sum_u log(exp(s_ut) / sum_v exp(s_uv)), stabilized by
    per-row max subtraction. Returns (loss, gradient w.r.t. scores).
    """
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ValueError("target set must be non-empty")
    scores = np.asarray(scores, dtype=np.float64)
    if not np.isfinite(scores).all():
        raise ValueError("scores must be finite")
    shift = scores - scores.max(axis=1, keepdims=True)
    expz = np.exp(shift)
    denom = expz.sum(axis=1, keepdims=True)
    log_denom = np.log(denom[:, 0])
    # per user: |T| * logsumexp - sum_t s_ut   (shifted form cancels the max)
    loss = float(np.sum(targets.size * log_denom - shift[:, targets].sum(axis=1)))
    grad = (targets.size / denom) * expz
    grad[:, targets] -= 1.0
    return loss, grad


def group_miss_mask(scores, group1, targets, k):
    """Indicator that a target is absent from a group-1 user's current top-k."""
    targets = np.asarray(targets, dtype=np.int64)
    ranked = topk_from_scores(np.asarray(scores, dtype=np.float64)[group1], k)
    mask = np.ones((len(group1), targets.size), dtype=bool)
    for row, rec in enumerate(ranked):
        present = np.isin(targets, rec)
        mask[row, present] = False
    return mask


def group_loss(scores, targets, groups, k=10, miss_mask=None):
    """Promote targets to group 0 while suppressing them for group 1.

    loss = sum_t ( mean_{u in U1} I[t not in top-k(u)] s_ut
                   - mean_{u in U0} s_ut ).
    The indicator is piecewise-constant and treated as a constant for the
    gradient; pass ``miss_mask`` to reuse one frozen within an iteration.
    """
    g0, g1 = groups.group0, groups.group1
    if g0.size == 0 or g1.size == 0:
        raise ValueError("both user groups must be non-empty")
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == 0:
        raise ValueError("target set must be non-empty")
    scores = np.asarray(scores, dtype=np.float64)
    if miss_mask is None:
        miss_mask = group_miss_mask(scores, g1, targets, k)
    s1 = scores[np.ix_(g1, targets)]
    s0 = scores[np.ix_(g0, targets)]
    loss = float((miss_mask * s1).sum() / g1.size - s0.sum() / g0.size)
    grad = np.zeros_like(scores)
    grad[np.ix_(g1, targets)] = miss_mask / g1.size
    grad[np.ix_(g0, targets)] += -1.0 / g0.size
    return loss, grad


def attack_loss_theta(params, n_real_users, objective):
    """Evaluate an objective at embedding parameters; gradient w.r.t. them.

    Only real users' scores enter the objective, so fake users' embedding
    rows receive zero gradient.
    """
    U = params.user_emb[:n_real_users]
    scores = U @ params.item_emb.T
    loss, g_scores = objective(scores)
    grad_user = np.zeros_like(params.user_emb)
    grad_user[:n_real_users] = g_scores @ params.item_emb
    grad_item = g_scores.T @ U
    return loss, EmbeddingParams(grad_user, grad_item)
