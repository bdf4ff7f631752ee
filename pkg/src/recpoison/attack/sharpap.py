"""Sharpness-aware poisoning: the tri-level attack loop.

Each outer iteration retrains the surrogate on the relaxed poisoned matrix,
lifts the attack gradient to the approximately worst-case model on the
epsilon-sphere, differentiates through the recorded training run, and takes
a projected gradient step on the fake rows. With epsilon = 0 the loop is
exactly the plain bi-level gradient attack (the backbone).
"""

import time

import numpy as np
from sklearn.base import BaseEstimator, clone

from ..models.wrmf import WRMF, confidence_weights
from ..validation import check_item_set, check_positive
from .baselines import _resolve_profile_size
from .objectives import attack_loss_theta, full_user_loss, group_loss, group_miss_mask
from .profiles import fake_user_count, init_fake_profiles, project_topn
from .sam import sam_perturbation
from .unroll import hypergradient


class SharpAPAttack(BaseEstimator):
    """Generate poisoned fake-user profiles against a surrogate recommender.

    Parameters
    ----------
    surrogate : WRMF instance or None
        Template for the inner model; cloned, with trajectory recording
        forced on. Defaults to a desk-scale WRMF.
    delta : fraction of real users to inject as fake users.
    profile_size : interactions per fake user; defaults to the dataset's
        average rounded to an integer.
    epsilon : radius of the worst-case parameter perturbation (0 = backbone).
    outer_lr, outer_iters : projected-gradient step size and iteration count.
    objective : ``full_user`` or ``group``.
    group_topk : k for the current-recommendation indicator in the group loss.
    unroll_steps : how many inner steps to differentiate through (None = all).
    warm_start_surrogate : reuse the previous iteration's parameters as the
        next inner initialization instead of retraining from the seeded init.
    """

    def __init__(
        self,
        surrogate=None,
        delta=0.01,
        profile_size=None,
        epsilon=0.05,
        outer_lr=1.0,
        outer_iters=10,
        objective="full_user",
        group_topk=10,
        unroll_steps=None,
        warm_start_surrogate=False,
        seed=0,
    ):
        self.surrogate = surrogate
        self.delta = delta
        self.profile_size = profile_size
        self.epsilon = epsilon
        self.outer_lr = outer_lr
        self.outer_iters = outer_iters
        self.objective = objective
        self.group_topk = group_topk
        self.unroll_steps = unroll_steps
        self.warm_start_surrogate = warm_start_surrogate
        self.seed = seed

    def _make_objective(self, theta_star, n_real, targets, groups):
        if self.objective == "full_user":
            return lambda s: full_user_loss(s, targets)
        if self.objective != "group":
            raise ValueError(f"unknown objective {self.objective!r}")
        if groups is None:
            raise ValueError("group objective requires user groups")
        scores = theta_star.user_emb[:n_real] @ theta_star.item_emb.T
        mask = group_miss_mask(scores, groups.group1, targets, self.group_topk)
        return lambda s: group_loss(s, targets, groups, self.group_topk, miss_mask=mask)

    def fit(self, R, target_items, groups=None):
        check_positive(self.epsilon, "epsilon", strict=False)
        check_positive(self.outer_lr, "outer_lr", strict=False)
        if self.outer_iters < 1:
            raise ValueError("outer_iters must be >= 1")
        targets = check_item_set(target_items, R.num_items, name="target_items")
        n_real = R.num_users
        n_fake = fake_user_count(self.delta, n_real)
        size = _resolve_profile_size(self.profile_size, R)

        template = self.surrogate if self.surrogate is not None else WRMF()
        surrogate = clone(template)
        surrogate.set_params(record_trajectory=True)

        profiles = init_fake_profiles(n_fake, R.num_items, targets, size, seed=self.seed)
        R_real = R.to_dense()
        attack_losses, sharp_losses, iter_seconds = [], [], []
        for _ in range(self.outer_iters):
            iter_start = time.perf_counter()
            poisoned = np.vstack([R_real, profiles.continuous])
            if self.warm_start_surrogate:
                surrogate.set_params(warm_start=True)
            surrogate.fit(poisoned)
            trajectory = surrogate.trajectory_
            theta_star = trajectory.final

            objective = self._make_objective(theta_star, n_real, targets, groups)
            loss_star, grad_theta = attack_loss_theta(theta_star, n_real, objective)
            perturbation = sam_perturbation(grad_theta.flatten(), self.epsilon)

            weights = confidence_weights(
                poisoned, surrogate.observed_weight, surrogate.missing_weight
            )
            sharp_loss, rf_grad = hypergradient(
                trajectory,
                poisoned,
                weights,
                surrogate.l2_reg,
                surrogate.learning_rate,
                n_fake,
                objective,
                perturbation=perturbation,
                unroll_steps=self.unroll_steps,
                seed_loss_grad=(loss_star, grad_theta),
            )
            attack_losses.append(loss_star)
            sharp_losses.append(sharp_loss)

            updated = np.clip(profiles.continuous - self.outer_lr * rf_grad, 0.0, 1.0)
            profiles.continuous = updated
            profiles = project_topn(profiles).validate()
            iter_seconds.append(time.perf_counter() - iter_start)

        # one more surrogate fit to score the final profiles
        final_poisoned = np.vstack([R_real, profiles.continuous])
        if self.warm_start_surrogate:
            surrogate.set_params(warm_start=True)
        surrogate.fit(final_poisoned)
        objective = self._make_objective(surrogate.params_, n_real, targets, groups)
        final_loss, _ = attack_loss_theta(surrogate.params_, n_real, objective)
        attack_losses.append(final_loss)

        self.profiles_ = profiles
        self.attack_loss_history_ = np.asarray(attack_losses)
        self.sharp_loss_history_ = np.asarray(sharp_losses)
        self.iteration_seconds_ = np.asarray(iter_seconds)
        self.surrogate_ = surrogate
        self.num_fake_ = n_fake
        return self
