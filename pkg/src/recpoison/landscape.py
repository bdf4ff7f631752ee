"""2-D attack-loss landscape grids around trained parameters.

Two seeded standard-normal directions span a plane through the trained
point; the grid samples equidistant coefficients and records the attack
loss at each shifted parameter vector. Paired comparisons (backbone vs
sharpness-aware poisoning) must reuse the same seed so the directions
match, which the direction checksums make auditable.
"""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .validation import check_seed


def _checksum(vec):
    return hashlib.sha256(np.ascontiguousarray(vec, dtype=np.float64).tobytes()).hexdigest()


@dataclass
class LandscapeGrid:
    grid: np.ndarray
    m_values: np.ndarray
    n_values: np.ndarray
    seed: int
    direction_checksums: tuple
    theta_fingerprint: str
    center_index: tuple = field(init=False)

    def __post_init__(self):
        # with an even point count 0 is not sampled; record the cell closest
        # to the origin instead
        i = int(np.argmin(np.abs(self.m_values)))
        j = int(np.argmin(np.abs(self.n_values)))
        self.center_index = (i, j)

    @property
    def center_value(self):
        return float(self.grid[self.center_index])


def loss_landscape_grid(
    theta_star,
    loss_fn,
    seed=0,
    points=20,
    half_range=10.0,
    degenerate=False,
):
    """Evaluate ``loss_fn`` on a points x points plane around ``theta_star``.

    ``loss_fn`` maps a flat parameter vector to a scalar. Non-finite values
    are recorded as +inf markers rather than aborting. ``degenerate`` forces
    both directions to zero (constant-grid sanity checks).
    """
    theta_star = np.asarray(theta_star, dtype=np.float64)
    rng = check_seed(seed)
    if degenerate:
        w1 = np.zeros_like(theta_star)
        w2 = np.zeros_like(theta_star)
    else:
        w1 = rng.standard_normal(theta_star.size)
        w2 = rng.standard_normal(theta_star.size)
    coords = np.linspace(-half_range, half_range, points)
    grid = np.empty((points, points))
    for i, m in enumerate(coords):
        for j, n in enumerate(coords):
            try:
                value = float(loss_fn(theta_star + m * w1 + n * w2))
            except (FloatingPointError, OverflowError):
                value = np.inf
            grid[i, j] = value if np.isfinite(value) else np.inf
    return LandscapeGrid(
        grid=grid,
        m_values=coords,
        n_values=coords.copy(),
        seed=int(seed),
        direction_checksums=(_checksum(w1), _checksum(w2)),
        theta_fingerprint=_checksum(theta_star),
    )


def sharpness_score(grid):
    """(max - min) / (1 + |near-origin value|); lower means flatter.

    Grids containing +inf markers score +inf.
    """
    values = grid.grid
    if not np.isfinite(values).all():
        return float("inf")
    spread = float(values.max() - values.min())
    return spread / (1.0 + abs(grid.center_value))


def grid_to_csv(grid, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "loss"])
        for i, m in enumerate(grid.m_values):
            for j, n in enumerate(grid.n_values):
                writer.writerow([f"{m:.10g}", f"{n:.10g}", f"{grid.grid[i, j]:.10g}"])


def grid_metadata_to_json(grid, path, extra=None):
    payload = {
        "seed": grid.seed,
        "direction_checksums": list(grid.direction_checksums),
        "theta_fingerprint": grid.theta_fingerprint,
        "center_index": list(grid.center_index),
        "center_value": grid.center_value,
        "sharpness_score": sharpness_score(grid),
    }
    payload.update(extra or {})
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
