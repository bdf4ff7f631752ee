"""Weighted-regularized matrix factorization trained by full-batch descent.

This is both the attack surrogate and one of the victims. The surrogate
records its descent trajectory so the attack layer can differentiate through
the training run; gradients here are hand-derived closed forms.
"""

import numpy as np

from ..embeddings import EmbeddingParams, init_embeddings
from ..errors import DivergenceError
from .base import ImplicitRecommender, as_dense


def confidence_weights(R, observed_weight, missing_weight):
    """Per-entry weights: observed (entry > 0.5) vs missing.

    The 0.5 threshold keeps weights piecewise-constant in the relaxed fake
    entries, so downstream hypergradients stay well-defined.
    """
    return np.where(R > 0.5, float(observed_weight), float(missing_weight))


def wrmf_loss(params, R, weights, l2_reg):
    """Weighted squared-error loss and its exact gradient.

    loss = sum_{u,v} w_uv (r_uv - u_u . v_v)^2 + l2 (|U|^2 + |V|^2)
    """
    U, V = params.user_emb, params.item_emb
    with np.errstate(over="ignore", invalid="ignore"):
        resid = R - U @ V.T
        wres = weights * resid
        loss = float(np.sum(wres * resid)) + l2_reg * (np.sum(U * U) + np.sum(V * V))
        if not np.isfinite(loss):
            raise DivergenceError("non-finite reconstruction loss")
        grad_u = -2.0 * wres @ V + 2.0 * l2_reg * U
        grad_v = -2.0 * wres.T @ U + 2.0 * l2_reg * V
    return loss, EmbeddingParams(grad_u, grad_v)


def wrmf_gradient_step(params, R, weights, l2_reg, learning_rate):
    loss, grad = wrmf_loss(params, R, weights, l2_reg)
    new = EmbeddingParams(
        params.user_emb - learning_rate * grad.user_emb,
        params.item_emb - learning_rate * grad.item_emb,
    )
    return loss, new


def wrmf_hvp(params, R, weights, l2_reg, direction):
    """Hessian-vector product of the loss at ``params`` in ``direction``.

    Closed form from differentiating the gradient; used by the reverse-mode
    unroll. ``direction`` is an EmbeddingParams-shaped tangent.
    """
    U, V = params.user_emb, params.item_emb
    dU, dV = direction.user_emb, direction.item_emb
    resid = R - U @ V.T
    cross = weights * (dU @ V.T + U @ dV.T)
    wres = weights * resid
    h_u = 2.0 * cross @ V - 2.0 * wres @ dV + 2.0 * l2_reg * dU
    h_v = 2.0 * cross.T @ U - 2.0 * wres.T @ dU + 2.0 * l2_reg * dV
    return EmbeddingParams(h_u, h_v)


class TrainingTrajectory:
    """Recorded iterates of a full-batch descent run.

    Stores parameter snapshots every ``checkpoint_every`` steps (plus step 0
    and the final step) and replays the deterministic step function to
    recover any intermediate iterate.
    """

    def __init__(self, step_fn, checkpoint_every=1):
        self.step_fn = step_fn
        self.checkpoint_every = int(checkpoint_every)
        self.checkpoints = {}
        self.num_steps = 0

    def record(self, step, params, final=False):
        if step % self.checkpoint_every == 0 or final or step == 0:
            self.checkpoints[step] = params.copy()
        self.num_steps = max(self.num_steps, step)

    @property
    def final(self):
        return self.checkpoints[self.num_steps]

    def params_at(self, step):
        """Parameters entering step ``step + 1`` (step 0 is the init)."""
        if step in self.checkpoints:
            return self.checkpoints[step]
        base = max(s for s in self.checkpoints if s <= step)
        params = self.checkpoints[base]
        for _ in range(step - base):
            params = self.step_fn(params)
        return params


class WRMF(ImplicitRecommender):
    """Implicit-feedback matrix factorization with confidence weights.

    fit accepts a binary InteractionMatrix or a dense relaxed array in
    [0, 1]; the latter is how poisoned fake rows enter surrogate training.
    """

    def __init__(
        self,
        factors=32,
        learning_rate=0.01,
        steps=100,
        l2_reg=0.01,
        observed_weight=1.0,
        missing_weight=0.05,
        init_std=0.01,
        record_trajectory=False,
        checkpoint_every=1,
        warm_start=False,
        seed=0,
    ):
        self.factors = factors
        self.learning_rate = learning_rate
        self.steps = steps
        self.l2_reg = l2_reg
        self.observed_weight = observed_weight
        self.missing_weight = missing_weight
        self.init_std = init_std
        self.record_trajectory = record_trajectory
        self.checkpoint_every = checkpoint_every
        self.warm_start = warm_start
        self.seed = seed

    def fit(self, R):
        R = as_dense(R)
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.observed_weight < 0 or self.missing_weight < 0:
            raise ValueError("confidence weights must be >= 0")
        n_users, n_items = R.shape
        weights = confidence_weights(R, self.observed_weight, self.missing_weight)
        if self.warm_start and getattr(self, "params_", None) is not None and (
            self.params_.num_users == n_users and self.params_.num_items == n_items
        ):
            params = self.params_.copy()
        else:
            params = init_embeddings(n_users, n_items, self.factors, self.seed, std=self.init_std)

        def step_fn(p):
            return wrmf_gradient_step(p, R, weights, self.l2_reg, self.learning_rate)[1]

        trajectory = TrainingTrajectory(step_fn, self.checkpoint_every) if self.record_trajectory else None
        if trajectory is not None:
            trajectory.record(0, params)
        losses = []
        for t in range(1, self.steps + 1):
            try:
                loss, params = wrmf_gradient_step(params, R, weights, self.l2_reg, self.learning_rate)
            except DivergenceError as exc:
                raise DivergenceError("training diverged", step=t) from exc
            if not params.is_finite():
                raise DivergenceError("non-finite parameters", step=t)
            losses.append(loss)
            if trajectory is not None:
                trajectory.record(t, params, final=(t == self.steps))
        self.params_ = params
        self.trajectory_ = trajectory
        self.loss_curve_ = np.asarray(losses)
        self.train_shape_ = (n_users, n_items)
        return self
