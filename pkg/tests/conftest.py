import numpy as np
import pytest

from recpoison.interactions import InteractionMatrix


def make_matrix(rows, num_items=None):
    """Build an InteractionMatrix from per-user item lists with string labels."""
    rows = [np.asarray(sorted(r), dtype=np.int64) for r in rows]
    if num_items is None:
        num_items = max((int(r[-1]) for r in rows if r.size), default=-1) + 1
    return InteractionMatrix(
        len(rows),
        num_items,
        rows,
        [f"u{i}" for i in range(len(rows))],
        [f"i{j}" for j in range(num_items)],
    )


@pytest.fixture
def small_matrix():
    """8 users x 6 items, the shared desk fixture."""
    return make_matrix(
        [
            [0, 1, 2],
            [0, 2, 3],
            [1, 3, 4],
            [2, 4, 5],
            [0, 1, 5],
            [1, 2, 4],
            [3, 4, 5],
            [0, 3, 5],
        ],
        num_items=6,
    )


def central_fd(f, x, h=1e-5):
    """Central finite differences of a scalar function over a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    for i in range(x.size):
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (f(up) - f(dn)) / (2.0 * h)
    return grad


def rel_error(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom
