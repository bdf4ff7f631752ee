"""Pairwise-ranking matrix factorization trained by seeded minibatch SGD."""

import numpy as np

from ..embeddings import EmbeddingParams, init_embeddings
from ..errors import DivergenceError
from ..interactions import InteractionMatrix
from ..validation import check_seed
from .base import ImplicitRecommender, as_dense


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bpr_triple_loss(params, user, pos_item, neg_item, l2_reg):
    """Loss and exact gradient for one (u, i+, i-) sample.

    loss = -ln sigmoid(x) + l2 (|u_u|^2 + |v_i|^2 + |v_j|^2) with
    x = u_u . (v_i - v_j).
    """
    u = params.user_emb[user]
    vi = params.item_emb[pos_item]
    vj = params.item_emb[neg_item]
    x = float(u @ (vi - vj))
    loss = float(np.logaddexp(0.0, -x)) + l2_reg * (u @ u + vi @ vi + vj @ vj)
    coeff = -float(_sigmoid(np.array([-x]))[0])  # d(-ln sigmoid(x))/dx
    grad = EmbeddingParams(
        np.zeros_like(params.user_emb), np.zeros_like(params.item_emb)
    )
    grad.user_emb[user] = coeff * (vi - vj) + 2.0 * l2_reg * u
    grad.item_emb[pos_item] = coeff * u + 2.0 * l2_reg * vi
    grad.item_emb[neg_item] = -coeff * u + 2.0 * l2_reg * vj
    return loss, grad


def _positive_pairs(R):
    if isinstance(R, InteractionMatrix):
        users = np.concatenate(
            [np.full(r.size, u, dtype=np.int64) for u, r in enumerate(R.rows)]
        ) if R.num_users else np.empty(0, np.int64)
        items = np.concatenate(R.rows) if R.num_users else np.empty(0, np.int64)
        item_sets = [set(map(int, r)) for r in R.rows]
        return users, items, item_sets, R.num_users, R.num_items
    dense = as_dense(R)
    users, items = np.nonzero(dense > 0.5)
    item_sets = [set(map(int, np.flatnonzero(dense[u] > 0.5))) for u in range(dense.shape[0])]
    return users.astype(np.int64), items.astype(np.int64), item_sets, dense.shape[0], dense.shape[1]


def _sample_batch(rng, pos_users, pos_items, item_sets, n_items, batch_size):
    idx = rng.integers(pos_users.size, size=batch_size)
    users = pos_users[idx]
    pos = pos_items[idx]
    neg = np.empty(batch_size, dtype=np.int64)
    for b in range(batch_size):
        j = int(rng.integers(n_items))
        while j in item_sets[users[b]]:
            j = int(rng.integers(n_items))
        neg[b] = j
    return users, pos, neg


def _fit_pairwise(est, R, propagate, backpropagate):
    """Shared BPR-style SGD loop.

    ``propagate`` maps base embeddings to scoring embeddings (identity for
    plain BPR); ``backpropagate`` pulls score-level gradients back to the
    base table. Regularization acts on the base embeddings of the sampled
    triples in both cases.
    """
    pos_users, pos_items, item_sets, n_users, n_items = _positive_pairs(R)
    if pos_users.size == 0:
        raise ValueError("cannot fit a pairwise ranker on an empty matrix")
    if est.learning_rate <= 0:
        raise ValueError("learning_rate must be > 0")
    rng = check_seed(est.seed)
    params = init_embeddings(n_users, n_items, est.factors, est.seed, std=est.init_std)
    lr = est.learning_rate
    for t in range(1, est.steps + 1):
        users, pos, neg = _sample_batch(rng, pos_users, pos_items, item_sets, n_items, est.batch_size)
        scored = propagate(params)
        u_vec = scored.user_emb[users]
        diff = scored.item_emb[pos] - scored.item_emb[neg]
        x = np.sum(u_vec * diff, axis=1)
        coeff = -_sigmoid(-x)  # per-sample d(-ln sigmoid)/dx
        g_user = np.zeros_like(params.user_emb)
        g_item = np.zeros_like(params.item_emb)
        np.add.at(g_user, users, coeff[:, None] * diff)
        np.add.at(g_item, pos, coeff[:, None] * u_vec)
        np.add.at(g_item, neg, -coeff[:, None] * u_vec)
        grad = backpropagate(EmbeddingParams(g_user, g_item))
        np.add.at(grad.user_emb, users, 2.0 * est.l2_reg * params.user_emb[users])
        np.add.at(grad.item_emb, pos, 2.0 * est.l2_reg * params.item_emb[pos])
        np.add.at(grad.item_emb, neg, 2.0 * est.l2_reg * params.item_emb[neg])
        params = EmbeddingParams(
            params.user_emb - (lr / est.batch_size) * grad.user_emb,
            params.item_emb - (lr / est.batch_size) * grad.item_emb,
        )
        if not params.is_finite():
            raise DivergenceError("non-finite parameters", step=t)
    return params


class BPR(ImplicitRecommender):
    """Bayesian-personalized-ranking factorization, a victim model."""

    def __init__(
        self,
        factors=32,
        learning_rate=0.05,
        steps=2000,
        batch_size=128,
        l2_reg=1e-4,
        init_std=0.01,
        seed=0,
    ):
        self.factors = factors
        self.learning_rate = learning_rate
        self.steps = steps
        self.batch_size = batch_size
        self.l2_reg = l2_reg
        self.init_std = init_std
        self.seed = seed

    def fit(self, R):
        identity = lambda p: p
        self.params_ = _fit_pairwise(self, R, identity, identity)
        return self
