"""Empirical check of the smoothness-based transferability bound.

For a victim within an epsilon-ball of the trained surrogate, the attack
loss is bounded by the surrogate loss plus eps * |grad| plus a curvature
term L eps^2 / 2. This module samples the ball and counts violations, with
the smoothness constant estimated from sampled gradient differences unless
supplied.
"""

from dataclasses import dataclass

import numpy as np

from ..validation import check_seed


@dataclass
class TransferBoundReport:
    epsilon: float
    samples: int
    violations: int
    violation_rate: float
    base_loss: float
    grad_norm: float
    lipschitz: float
    lipschitz_supplied: bool
    max_excess: float

    @property
    def bound_value(self):
        return self.base_loss + self.epsilon * self.grad_norm + 0.5 * self.lipschitz * self.epsilon**2


def _ball_point(rng, dim, epsilon):
    v = rng.standard_normal(dim)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        return np.zeros(dim)
    return (epsilon * rng.random()) * v / norm


def estimate_lipschitz(loss_and_grad, theta_star, epsilon, pairs, rng, inflate=2.0):
    """Max sampled gradient-difference ratio in the ball, inflated for safety."""
    best = 0.0
    for _ in range(pairs):
        a = theta_star + _ball_point(rng, theta_star.size, epsilon)
        b = theta_star + _ball_point(rng, theta_star.size, epsilon)
        gap = np.linalg.norm(a - b)
        if gap == 0.0:
            continue
        _, ga = loss_and_grad(a)
        _, gb = loss_and_grad(b)
        best = max(best, float(np.linalg.norm(ga - gb) / gap))
    return inflate * best


def verify_transfer_bound(
    theta_star,
    loss_and_grad,
    epsilon,
    samples=100,
    lipschitz_estimate=None,
    seed=0,
):
    """Sample perturbations with |zeta| <= eps and count bound violations.

    ``loss_and_grad`` maps a flat parameter vector to (loss, grad). With
    epsilon = 0 the bound holds with equality by construction.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    theta_star = np.asarray(theta_star, dtype=np.float64)
    rng = check_seed(seed)
    base_loss, base_grad = loss_and_grad(theta_star)
    grad_norm = float(np.linalg.norm(base_grad))
    supplied = lipschitz_estimate is not None
    if supplied:
        lipschitz = float(lipschitz_estimate)
    elif epsilon == 0.0:
        lipschitz = 0.0
    else:
        lipschitz = estimate_lipschitz(loss_and_grad, theta_star, epsilon, samples, rng)
    bound = base_loss + epsilon * grad_norm + 0.5 * lipschitz * epsilon**2
    tol = 1e-9 * max(1.0, abs(bound))
    violations = 0
    max_excess = 0.0
    for _ in range(samples):
        zeta = _ball_point(rng, theta_star.size, epsilon)
        loss, _ = loss_and_grad(theta_star + zeta)
        excess = loss - bound
        if excess > tol:
            violations += 1
            max_excess = max(max_excess, float(excess))
    return TransferBoundReport(
        epsilon=float(epsilon),
        samples=samples,
        violations=violations,
        violation_rate=violations / samples,
        base_loss=base_loss,
        grad_norm=grad_norm,
        lipschitz=lipschitz,
        lipschitz_supplied=supplied,
        max_excess=max_excess,
    )
