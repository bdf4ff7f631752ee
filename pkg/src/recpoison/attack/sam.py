"""Worst-case parameter perturbation on the epsilon-sphere."""

from dataclasses import dataclass

import numpy as np


@dataclass
class SamPerturbation:
    """Flat parameter offset approximating the worst model in an eps-ball."""

    delta_theta: np.ndarray
    radius: float

    @property
    def is_zero(self):
        return self.radius == 0.0 or not self.delta_theta.any()


def sam_perturbation(grad_theta, epsilon):
    """First-order ascent direction scaled to the ball radius.

    delta = eps * g / |g|_2; a zero gradient (or eps = 0) yields the zero
    perturbation so the downstream attack reduces to its backbone.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    g = np.asarray(grad_theta, dtype=np.float64)
    if not np.isfinite(g).all():
        raise ValueError("gradient contains non-finite entries")
    norm = float(np.linalg.norm(g))
    if epsilon == 0.0 or norm == 0.0:
        return SamPerturbation(np.zeros_like(g), float(epsilon))
    return SamPerturbation((epsilon / norm) * g, float(epsilon))
