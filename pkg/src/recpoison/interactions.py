"""Implicit-feedback interaction data: loading, binarization, splits, stats.

The central type is :class:`InteractionMatrix`, a binary user x item matrix
stored as per-user sorted index rows together with the original-id maps.
All randomized operations take an explicit integer seed and are pure.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import EmptyDatasetError, ParseError
from .validation import check_seed

_DELIMITERS = (",", "\t", "::", ";", " ")


@dataclass
class InteractionMatrix:
    """Binary implicit-feedback matrix with dense 0-based user/item indices.

    rows[u] is the sorted array of item indices user u interacted with.
    user_ids / item_ids map original string labels to dense indices;
    user_labels / item_labels are the inverse lookup.
    """

    num_users: int
    num_items: int
    rows: list
    user_labels: list
    item_labels: list
    user_ids: dict = field(init=False, repr=False)
    item_ids: dict = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.rows) != self.num_users:
            raise ValueError("rows length must equal num_users")
        self.rows = [np.asarray(r, dtype=np.int64) for r in self.rows]
        for u, r in enumerate(self.rows):
            if r.size and (r[0] < 0 or r[-1] >= self.num_items):
                raise ValueError(f"user {u}: item index out of range")
            if r.size > 1 and not (np.diff(r) > 0).all():
                raise ValueError(f"user {u}: row must be sorted, duplicate-free")
        self.user_ids = {lab: i for i, lab in enumerate(self.user_labels)}
        self.item_ids = {lab: i for i, lab in enumerate(self.item_labels)}

    @property
    def num_interactions(self):
        return int(sum(r.size for r in self.rows))

    @property
    def density(self):
        cells = self.num_users * self.num_items
        return self.num_interactions / cells if cells else 0.0

    def to_dense(self, dtype=np.float64):
        R = np.zeros((self.num_users, self.num_items), dtype=dtype)
        for u, r in enumerate(self.rows):
            R[u, r] = 1
        return R

    def to_csr(self):
        indptr = np.zeros(self.num_users + 1, dtype=np.int64)
        for u, r in enumerate(self.rows):
            indptr[u + 1] = indptr[u] + r.size
        indices = np.concatenate(self.rows) if self.num_users else np.empty(0, np.int64)
        data = np.ones(indices.size, dtype=np.float64)
        return sp.csr_matrix((data, indices, indptr), shape=(self.num_users, self.num_items))

    def item_counts(self, users=None):
        """Interaction count per item, optionally restricted to a user subset."""
        counts = np.zeros(self.num_items, dtype=np.int64)
        user_iter = range(self.num_users) if users is None else users
        for u in user_iter:
            counts[self.rows[u]] += 1
        return counts

    def __repr__(self):
        return (
            f"InteractionMatrix(num_users={self.num_users}, num_items={self.num_items}, "
            f"num_interactions={self.num_interactions})"
        )

    def __eq__(self, other):
        if not isinstance(other, InteractionMatrix):
            return NotImplemented
        return (
            self.num_users == other.num_users
            and self.num_items == other.num_items
            and self.user_labels == other.user_labels
            and self.item_labels == other.item_labels
            and all(np.array_equal(a, b) for a, b in zip(self.rows, other.rows))
        )


@dataclass
class DatasetStats:
    num_users: int
    num_items: int
    num_interactions: int
    avg_items_per_user: float
    density: float


@dataclass
class Split:
    """Per-user disjoint train/validation/test partition over shared id maps."""

    train: InteractionMatrix
    validation: InteractionMatrix
    test: InteractionMatrix


@dataclass
class UserGroups:
    """Two disjoint user-index sets (attribute value 0 and 1)."""

    group0: np.ndarray
    group1: np.ndarray

    def __post_init__(self):
        self.group0 = np.unique(np.asarray(self.group0, dtype=np.int64))
        self.group1 = np.unique(np.asarray(self.group1, dtype=np.int64))
        if np.intersect1d(self.group0, self.group1).size:
            raise ValueError("groups must be disjoint")


@dataclass
class RatingTriplets:
    """Raw explicit-feedback triples in file order, before binarization."""

    users: list
    items: list
    ratings: np.ndarray


def _from_pairs(pairs):
    """Build an InteractionMatrix from (user_label, item_label) pairs.

    Dense indices are assigned by first appearance; duplicate pairs collapse
    to a single interaction.
    """
    user_ids, item_ids = {}, {}
    user_labels, item_labels = [], []
    seen = set()
    per_user = []
    for u_lab, i_lab in pairs:
        if u_lab not in user_ids:
            user_ids[u_lab] = len(user_labels)
            user_labels.append(u_lab)
            per_user.append([])
        if i_lab not in item_ids:
            item_ids[i_lab] = len(item_labels)
            item_labels.append(i_lab)
        key = (user_ids[u_lab], item_ids[i_lab])
        if key in seen:
            continue
        seen.add(key)
        per_user[key[0]].append(key[1])
    rows = [np.array(sorted(r), dtype=np.int64) for r in per_user]
    return InteractionMatrix(len(user_labels), len(item_labels), rows, user_labels, item_labels)


def _split_line(line):
    for d in _DELIMITERS:
        if d in line:
            return [t.strip() for t in line.split(d)]
    return [line.strip()]


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_interactions(path, format="triplet-csv"):
    """Load a triplet/rating CSV into an InteractionMatrix.

    Lines are ``user,item[,rating[,timestamp]]``; a header line is detected by
    a non-numeric first row and skipped. For ``rating-csv`` the rating column
    is required (use :func:`load_ratings` + :func:`binarize_explicit` to keep
    the rating values).
    """
    if format not in ("triplet-csv", "rating-csv"):
        raise ValueError(f"unknown format {format!r}")
    min_cols = 3 if format == "rating-csv" else 2
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = _split_line(line)
            if lineno == 1 and tokens and not _is_number(tokens[0]):
                continue  # header
            if len(tokens) < min_cols:
                raise ParseError(f"expected at least {min_cols} fields, got {len(tokens)}", line=lineno)
            if format == "rating-csv" and not _is_number(tokens[2]):
                raise ParseError(f"rating field {tokens[2]!r} is not numeric", line=lineno)
            pairs.append((tokens[0], tokens[1]))
    if not pairs:
        raise EmptyDatasetError(f"{path} holds no interactions")
    return _from_pairs(pairs)


def load_ratings(path):
    """Load ``user,item,rating[,timestamp]`` rows keeping the rating values."""
    users, items, ratings = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            tokens = _split_line(line)
            if lineno == 1 and tokens and not _is_number(tokens[0]):
                continue
            if len(tokens) < 3:
                raise ParseError(f"expected user,item,rating, got {len(tokens)} fields", line=lineno)
            if not _is_number(tokens[2]):
                raise ParseError(f"rating field {tokens[2]!r} is not numeric", line=lineno)
            users.append(tokens[0])
            items.append(tokens[1])
            ratings.append(float(tokens[2]))
    if not users:
        raise EmptyDatasetError(f"{path} holds no ratings")
    return RatingTriplets(users, items, np.asarray(ratings, dtype=np.float64))


def binarize_explicit(ratings, threshold):
    """Keep (u, v) pairs with rating >= threshold; rebuild id maps.

    Users/items left without interactions are dropped and dense indices are
    reassigned by first appearance among the surviving triples.
    """
    r = ratings.ratings
    if r.size and (threshold > r.max() or threshold < r.min()):
        warnings.warn(
            f"threshold {threshold} outside observed rating range [{r.min()}, {r.max()}]",
            stacklevel=2,
        )
    pairs = [
        (u, i)
        for u, i, val in zip(ratings.users, ratings.items, r)
        if val >= threshold
    ]
    if not pairs:
        raise EmptyDatasetError("no interactions survive the rating threshold")
    return _from_pairs(pairs)


def save_triplets(m, path):
    """Persist as triplet CSV, rows sorted by (user index, item index)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("user_id,item_id\n")
        for u in range(m.num_users):
            for i in m.rows[u]:
                fh.write(f"{m.user_labels[u]},{m.item_labels[int(i)]}\n")


def subset_rows(m, keep_sets):
    """Replace each user's row with the given per-user item subsets."""
    rows = [np.array(sorted(s), dtype=np.int64) for s in keep_sets]
    return InteractionMatrix(m.num_users, m.num_items, rows, list(m.user_labels), list(m.item_labels))


def split_dataset(m, ratios=(7, 1, 2), seed=0):
    """Per-user random train/validation/test split (default 7:1:2).

    Users with fewer than 3 interactions go wholly to train. Allocation per
    user rounds the validation/test shares half-up, keeping at least one
    training interaction.
    """
    if len(ratios) != 3 or any(x < 0 for x in ratios) or ratios[0] <= 0:
        raise ValueError(f"bad split ratios {ratios!r}")
    rng = check_seed(seed)
    total = float(sum(ratios))
    train_rows, val_rows, test_rows = [], [], []
    for u in range(m.num_users):
        items = m.rows[u]
        n = items.size
        if n < 3:
            train_rows.append(items)
            val_rows.append(np.empty(0, np.int64))
            test_rows.append(np.empty(0, np.int64))
            continue
        perm = rng.permutation(n)
        n_val = int(n * ratios[1] / total + 0.5)
        n_test = int(n * ratios[2] / total + 0.5)
        while n - n_val - n_test < 1:
            if n_val > 0:
                n_val -= 1
            else:
                n_test -= 1
        shuffled = items[perm]
        val_rows.append(shuffled[:n_val])
        test_rows.append(shuffled[n_val:n_val + n_test])
        train_rows.append(shuffled[n_val + n_test:])
    return Split(
        train=subset_rows(m, train_rows),
        validation=subset_rows(m, val_rows),
        test=subset_rows(m, test_rows),
    )


def dataset_stats(m):
    n_inter = m.num_interactions
    avg = n_inter / m.num_users if m.num_users else 0.0
    return DatasetStats(m.num_users, m.num_items, n_inter, avg, m.density)


def popularity_bands(m, group=None, popular_fraction=0.2):
    """Partition items into popular (top 20% by count) and unpopular (rest).

    Counts are restricted to ``group`` users when given; ties break toward
    the lower item index.
    """
    counts = m.item_counts(users=group)
    order = np.lexsort((np.arange(m.num_items), -counts))
    n_pop = int(np.ceil(popular_fraction * m.num_items))
    popular = np.sort(order[:n_pop])
    unpopular = np.sort(order[n_pop:])
    return popular, unpopular


def sample_target_items(m, count=5, band="uniform", group=None, seed=0):
    """Sample target items uniformly from a popularity band.

    band: ``uniform`` (all items), ``popular`` (top 20% by interaction count,
    within ``group`` when given) or ``unpopular`` (bottom 80%).
    """
    if band == "uniform":
        candidates = np.arange(m.num_items)
    elif band in ("popular", "unpopular"):
        popular, unpopular = popularity_bands(m, group=group)
        candidates = popular if band == "popular" else unpopular
    else:
        raise ValueError(f"unknown band {band!r}")
    if candidates.size == 0:
        raise ValueError(f"band {band!r} is empty")
    if count > candidates.size:
        raise ValueError(f"cannot sample {count} items from band of {candidates.size}")
    rng = check_seed(seed)
    chosen = rng.choice(candidates, size=count, replace=False)
    return np.sort(chosen)


def group_users(attributes, m):
    """Partition users by a binary attribute mapping original id -> {0, 1}.

    ``attributes`` is a JSON file path or a dict. Users missing from the
    mapping (or mapped to null) are excluded from both groups; ids absent
    from the matrix are skipped with a warning.
    """
    if not isinstance(attributes, dict):
        with open(attributes, "r", encoding="utf-8") as fh:
            attributes = json.load(fh)
    g0, g1 = [], []
    for key, value in attributes.items():
        label = str(key)
        if label not in m.user_ids:
            warnings.warn(f"attribute id {label!r} not in matrix, skipped", stacklevel=2)
            continue
        if value is None:
            continue
        if value not in (0, 1):
            raise ValueError(f"attribute for {label!r} must be 0, 1 or null, got {value!r}")
        (g0 if value == 0 else g1).append(m.user_ids[label])
    return UserGroups(np.array(g0, dtype=np.int64), np.array(g1, dtype=np.int64))


def k_core_filter(m, k):
    """Iteratively drop items then users with < k interactions, to fixpoint.

    Id maps are rebuilt keeping the surviving labels in their original index
    order.
    """
    if k <= 1:
        return m
    keep_u = np.ones(m.num_users, dtype=bool)
    keep_i = np.ones(m.num_items, dtype=bool)
    while True:
        item_counts = np.zeros(m.num_items, dtype=np.int64)
        for u in range(m.num_users):
            if keep_u[u]:
                r = m.rows[u]
                item_counts[r[keep_i[r]]] += 1
        drop_i = keep_i & (item_counts < k)
        keep_i &= item_counts >= k
        user_counts = np.array(
            [keep_i[m.rows[u]].sum() if keep_u[u] else 0 for u in range(m.num_users)]
        )
        drop_u = keep_u & (user_counts < k)
        keep_u &= user_counts >= k
        if not drop_i.any() and not drop_u.any():
            break
    if not keep_u.any():
        raise EmptyDatasetError(f"{k}-core filtering removed every user")
    new_item_idx = -np.ones(m.num_items, dtype=np.int64)
    new_item_idx[keep_i] = np.arange(int(keep_i.sum()))
    rows, user_labels = [], []
    for u in range(m.num_users):
        if not keep_u[u]:
            continue
        r = m.rows[u]
        rows.append(new_item_idx[r[keep_i[r]]])
        user_labels.append(m.user_labels[u])
    item_labels = [lab for i, lab in enumerate(m.item_labels) if keep_i[i]]
    return InteractionMatrix(len(rows), len(item_labels), rows, user_labels, item_labels)


def append_fake_users(m, fake_rows, label_prefix="fake"):
    """Return a matrix with binary fake-user rows appended after real users."""
    fake_rows = [np.flatnonzero(np.asarray(r) > 0.5).astype(np.int64) for r in np.atleast_2d(fake_rows)]
    rows = list(m.rows) + fake_rows
    user_labels = list(m.user_labels) + [f"{label_prefix}_{j}" for j in range(len(fake_rows))]
    return InteractionMatrix(len(rows), m.num_items, rows, user_labels, list(m.item_labels))
