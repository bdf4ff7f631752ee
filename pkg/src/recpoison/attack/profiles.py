"""Fake-user profiles: continuous relaxation, top-N projection, disk format."""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..validation import check_seed


@dataclass
class FakeProfiles:
    """Relaxed and discretized interaction rows for the injected users.

    Every discrete row carries all target items and at most
    ``max_interactions`` ones in total.
    """

    continuous: np.ndarray
    discrete: np.ndarray
    target_items: np.ndarray
    max_interactions: int
    num_fake: int = field(init=False)
    num_items: int = field(init=False)

    def __post_init__(self):
        self.continuous = np.asarray(self.continuous, dtype=np.float64)
        self.discrete = np.asarray(self.discrete, dtype=np.float64)
        self.target_items = np.asarray(sorted(self.target_items), dtype=np.int64)
        if self.continuous.shape != self.discrete.shape:
            raise ValueError("continuous/discrete shape mismatch")
        self.num_fake, self.num_items = self.continuous.shape

    def validate(self):
        """Assert the row-budget and forced-target invariants."""
        if self.continuous.min(initial=0.0) < 0.0 or self.continuous.max(initial=0.0) > 1.0:
            raise ValueError("continuous entries must lie in [0, 1]")
        support = self.discrete > 0.5
        if (support.sum(axis=1) > self.max_interactions).any():
            raise ValueError("a discrete row exceeds the interaction budget")
        if not support[:, self.target_items].all():
            raise ValueError("a discrete row is missing a target item")
        return self


def init_fake_profiles(num_fake, num_items, target_items, max_interactions, seed=0):
    """Targets at 1, other entries uniform in [0, 0.1); projected discretely."""
    target_items = np.asarray(sorted(target_items), dtype=np.int64)
    rng = check_seed(seed)
    cont = 0.1 * rng.random((num_fake, num_items))
    cont[:, target_items] = 1.0
    fp = FakeProfiles(cont, np.zeros_like(cont), target_items, int(max_interactions))
    return project_topn(fp)


def project_topn(fp):
    """Discretize each row: force targets, then keep the top-scoring items.

    The remaining ``max_interactions - |targets|`` slots go to the largest
    continuous entries among non-target items, ties toward the lower index.
    """
    n_targets = fp.target_items.size
    budget = fp.max_interactions - n_targets
    if budget < 0:
        raise ValueError(
            f"profile budget {fp.max_interactions} cannot hold {n_targets} target items"
        )
    masked = fp.continuous.copy()
    masked[:, fp.target_items] = -np.inf
    discrete = np.zeros_like(fp.continuous)
    discrete[:, fp.target_items] = 1.0
    if budget > 0:
        order = np.argsort(-masked, axis=1, kind="stable")
        fill = order[:, :budget]
        np.put_along_axis(discrete, fill, 1.0, axis=1)
    return FakeProfiles(fp.continuous, discrete, fp.target_items, fp.max_interactions)


def fake_user_count(delta, num_real_users):
    """floor(delta * |U^r|); must come out to at least one fake user."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    n = int(np.floor(delta * num_real_users))
    if n < 1:
        raise ValueError(
            f"delta={delta} yields zero fake users for {num_real_users} real users"
        )
    return n


def save_fake_profiles(fp, csv_path, sidecar_path=None, metadata=None):
    """Write discrete rows as ``fake_user_index,item_index,1`` triplets plus
    a JSON sidecar with the attack configuration and loss log."""
    csv_path = Path(csv_path)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("fake_user_index,item_index,value\n")
        for u in range(fp.num_fake):
            for i in np.flatnonzero(fp.discrete[u] > 0.5):
                fh.write(f"{u},{i},1\n")
    if sidecar_path is not None:
        sidecar = {
            "num_fake": fp.num_fake,
            "num_items": fp.num_items,
            "target_items": [int(t) for t in fp.target_items],
            "max_interactions": int(fp.max_interactions),
        }
        sidecar.update(metadata or {})
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_fake_profiles(csv_path, sidecar_path):
    with open(sidecar_path, "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    discrete = np.zeros((meta["num_fake"], meta["num_items"]))
    with open(csv_path, "r", encoding="utf-8") as fh:
        next(fh)  # header
        for line in fh:
            u, i, _ = line.strip().split(",")
            discrete[int(u), int(i)] = 1.0
    fp = FakeProfiles(
        discrete.copy(),
        discrete,
        np.asarray(meta["target_items"], dtype=np.int64),
        meta["max_interactions"],
    )
    return fp, meta
