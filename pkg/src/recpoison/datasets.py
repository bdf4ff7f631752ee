"""Seeded synthetic implicit-feedback generators for desk-scale experiments."""

import numpy as np

from .interactions import InteractionMatrix
from .validation import check_seed


def synthetic_interactions(
    num_users=600,
    num_items=400,
    avg_items=20,
    latent_dim=8,
    num_segments=6,
    popularity_scale=1.0,
    seed=0,
):
    """Generate a segment-structured implicit-feedback matrix.

    Users and items carry latent factors drawn around shared segment centers,
    plus a lognormal item popularity bias, so trained recommenders pick up
    real collaborative structure. Every user gets at least 3 interactions.
    """
    rng = check_seed(seed)
    centers = rng.normal(size=(num_segments, latent_dim))
    u_seg = rng.integers(num_segments, size=num_users)
    i_seg = rng.integers(num_segments, size=num_items)
    user_f = centers[u_seg] + 0.7 * rng.normal(size=(num_users, latent_dim))
    item_f = centers[i_seg] + 0.7 * rng.normal(size=(num_items, latent_dim))
    pop_bias = popularity_scale * rng.normal(size=num_items)

    affinity = user_f @ item_f.T / np.sqrt(latent_dim) + pop_bias
    rows = []
    for u in range(num_users):
        logits = affinity[u] - affinity[u].max()
        p = np.exp(logits)
        p /= p.sum()
        n = int(np.clip(rng.poisson(avg_items), 3, num_items))
        items = rng.choice(num_items, size=n, replace=False, p=p)
        rows.append(np.sort(items))
    user_labels = [f"u{u}" for u in range(num_users)]
    item_labels = [f"i{i}" for i in range(num_items)]
    return InteractionMatrix(num_users, num_items, rows, user_labels, item_labels)
