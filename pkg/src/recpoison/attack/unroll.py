"""Reverse-mode differentiation of the attack loss through surrogate SGD.

Walks the recorded descent trajectory backwards, pulling the attack-loss
gradient through each step via the closed-form Hessian-vector product, and
accumulates the derivative with respect to the continuous fake-user rows.
"""

import numpy as np

from ..embeddings import EmbeddingParams
from ..models.wrmf import wrmf_hvp
from .objectives import attack_loss_theta


def hypergradient(
    trajectory,
    R,
    weights,
    l2_reg,
    learning_rate,
    n_fake,
    objective,
    perturbation=None,
    unroll_steps=None,
    seed_loss_grad=None,
):
    """Gradient of the attack objective w.r.t. the fake rows of ``R``.

    The objective is evaluated at the trajectory's final parameters plus the
    (constant) worst-case perturbation, then backpropagated through the last
    ``unroll_steps`` recorded gradient steps. With ``unroll_steps=0`` the
    final parameters are treated as independent of the fake rows and the
    result is identically zero.

    ``seed_loss_grad`` lets a caller that already evaluated the objective at
    the unperturbed optimum pass (loss, grad) in; it is only usable when the
    perturbation is absent or zero, which is what makes the zero-radius
    backbone exactly one backward pass cheaper per outer iteration.

    Returns (attack loss at the evaluated point, array of shape
    (n_fake, num_items)).
    """
    T = trajectory.num_steps
    unroll = T if unroll_steps is None else min(int(unroll_steps), T)
    if unroll < 0:
        raise ValueError("unroll_steps must be >= 0")
    final = trajectory.final
    n_users_total, n_items = R.shape
    if final.num_users != n_users_total or final.num_items != n_items:
        raise ValueError("trajectory parameters do not match the poisoned matrix shape")
    n_real = n_users_total - n_fake

    zero_pert = perturbation is None or perturbation.is_zero
    if zero_pert and seed_loss_grad is not None:
        loss, adj = seed_loss_grad
    else:
        if zero_pert:
            eval_params = final
        else:
            eval_params = final.like(final.flatten() + perturbation.delta_theta)
        loss, adj = attack_loss_theta(eval_params, n_real, objective)

    rf_grad = np.zeros((n_fake, n_items))
    for t in range(T, T - unroll, -1):
        prev = trajectory.params_at(t - 1)
        U, V = prev.user_emb, prev.item_emb
        gU, gV = adj.user_emb, adj.item_emb
        # d(step)/dR restricted to fake rows: 2*lr*w (.) (gU V^T + U gV^T)
        rf_grad += (2.0 * learning_rate) * weights[n_real:] * (
            gU[n_real:] @ V.T + U[n_real:] @ gV.T
        )
        hv = wrmf_hvp(prev, R, weights, l2_reg, adj)
        adj = EmbeddingParams(
            adj.user_emb - learning_rate * hv.user_emb,
            adj.item_emb - learning_rate * hv.item_emb,
        )
    return loss, rf_grad
