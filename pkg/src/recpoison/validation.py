"""Input validation helpers used by the estimators and free functions."""

import numbers

import numpy as np


def check_seed(seed):
    """Return a fresh ``numpy.random.Generator`` for an integer seed.

    Estimators take plain integer seeds so that runs are reproducible and
    configs serialize; passing a Generator is rejected on purpose.
    """
    if not isinstance(seed, numbers.Integral):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    return np.random.default_rng(int(seed))


def check_positive(value, name, strict=True):
    if not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ValueError(f"{name} must be a finite number, got {value!r}")
    if strict and value <= 0:
        raise ValueError(f"{name} must be > 0, got {value!r}")
    if not strict and value < 0:
        raise ValueError(f"{name} must be >= 0, got {value!r}")
    return value


def check_dense_interactions(R, *, name="R"):
    """Validate a dense (possibly relaxed) interaction array in [0, 1]."""
    R = np.asarray(R, dtype=np.float64)
    if R.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {R.shape}")
    if not np.isfinite(R).all():
        raise ValueError(f"{name} contains non-finite entries")
    if R.min(initial=0.0) < 0.0 or R.max(initial=0.0) > 1.0:
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return R


def check_user_indices(users, num_users, *, name="users"):
    users = np.asarray(users, dtype=np.int64)
    if users.ndim != 1:
        raise ValueError(f"{name} must be 1-D")
    if users.size and (users.min() < 0 or users.max() >= num_users):
        raise ValueError(f"{name} out of range [0, {num_users})")
    return users


def check_item_set(items, num_items, *, name="items"):
    """Normalize an item collection to a sorted, duplicate-free index array."""
    items = np.unique(np.asarray(sorted(items), dtype=np.int64))
    if items.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if items.min() < 0 or items.max() >= num_items:
        raise ValueError(f"{name} out of range [0, {num_items})")
    return items
