import numpy as np
import pytest

from recpoison.attack.objectives import attack_loss_theta, full_user_loss
from recpoison.attack.sam import SamPerturbation, sam_perturbation
from recpoison.attack.unroll import hypergradient
from recpoison.models.wrmf import WRMF, confidence_weights

from conftest import rel_error


def make_instance(n_real=4, n_fake=2, n_items=3, d=2, T=3, seed=42,
                  lr=0.1, l2=0.01, init_std=0.4):
    rng = np.random.default_rng(seed)
    R_real = (rng.random((n_real, n_items)) < 0.5).astype(float)
    # fake entries sit away from the 0.5 confidence threshold and the clamp
    Rf = rng.uniform(0.05, 0.45, size=(n_fake, n_items))
    targets = np.array([rng.integers(n_items)])
    cfg = dict(factors=d, steps=T, learning_rate=lr, l2_reg=l2,
               init_std=init_std, record_trajectory=True, seed=7)
    return R_real, Rf, targets, cfg


def train(R_real, Rf, cfg):
    poisoned = np.vstack([R_real, Rf])
    model = WRMF(**cfg).fit(poisoned)
    return model, poisoned


def composite_loss(R_real, Rf_flat, targets, cfg, epsilon, n_fake, n_items):
    """The end-to-end map: fake rows -> retrain -> perturb -> attack loss."""
    model, _ = train(R_real, Rf_flat.reshape(n_fake, n_items), cfg)
    theta = model.trajectory_.final
    objective = lambda s: full_user_loss(s, targets)
    loss, grad = attack_loss_theta(theta, R_real.shape[0], objective)
    pert = sam_perturbation(grad.flatten(), epsilon)
    if pert.is_zero:
        return loss
    shifted = theta.like(theta.flatten() + pert.delta_theta)
    return attack_loss_theta(shifted, R_real.shape[0], objective)[0]


def analytic_hypergradient(R_real, Rf, targets, cfg, epsilon, unroll_steps=None,
                           frozen_perturbation=None):
    model, poisoned = train(R_real, Rf, cfg)
    traj = model.trajectory_
    objective = lambda s: full_user_loss(s, targets)
    if frozen_perturbation is None:
        _, grad = attack_loss_theta(traj.final, R_real.shape[0], objective)
        pert = sam_perturbation(grad.flatten(), epsilon)
    else:
        pert = frozen_perturbation
    weights = confidence_weights(poisoned, model.observed_weight, model.missing_weight)
    return hypergradient(
        traj, poisoned, weights, model.l2_reg, model.learning_rate,
        Rf.shape[0], objective, perturbation=pert, unroll_steps=unroll_steps,
    )


def fd_composite(R_real, Rf, targets, cfg, epsilon, h=1e-5):
    flat = Rf.ravel()
    fd = np.zeros_like(flat)
    for i in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[i] += h
        dn[i] -= h
        fd[i] = (
            composite_loss(R_real, up, targets, cfg, epsilon, *Rf.shape)
            - composite_loss(R_real, dn, targets, cfg, epsilon, *Rf.shape)
        ) / (2 * h)
    return fd.reshape(Rf.shape)


def test_unroll_zero_steps_gives_zero_gradient():
    R_real, Rf, targets, cfg = make_instance()
    _, grad = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0, unroll_steps=0)
    assert not grad.any()


def test_full_unroll_matches_composite_fd_backbone():
    for seed in (42, 43, 44):
        R_real, Rf, targets, cfg = make_instance(seed=seed)
        _, grad = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0)
        fd = fd_composite(R_real, Rf, targets, cfg, 0.0)
        assert rel_error(grad, fd) < 1e-3


def test_full_unroll_matches_composite_fd_with_perturbation():
    # small radius: the constant-perturbation treatment is first-order exact
    R_real, Rf, targets, cfg = make_instance(seed=45)
    for epsilon in (1e-4, 1e-3):
        _, grad = analytic_hypergradient(R_real, Rf, targets, cfg, epsilon)
        fd = fd_composite(R_real, Rf, targets, cfg, epsilon)
        assert rel_error(grad, fd) < 1e-3


def test_frozen_perturbation_matches_fd_tightly():
    # holding the perturbation fixed removes the approximation entirely
    R_real, Rf, targets, cfg = make_instance(seed=46)
    model, _ = train(R_real, Rf, cfg)
    objective = lambda s: full_user_loss(s, targets)
    _, g = attack_loss_theta(model.trajectory_.final, R_real.shape[0], objective)
    pert = sam_perturbation(g.flatten(), 0.05)

    _, grad = analytic_hypergradient(R_real, Rf, targets, cfg, 0.05, frozen_perturbation=pert)

    def f_frozen(flat):
        m, _ = train(R_real, flat.reshape(Rf.shape), cfg)
        theta = m.trajectory_.final
        shifted = theta.like(theta.flatten() + pert.delta_theta)
        return attack_loss_theta(shifted, R_real.shape[0], objective)[0]

    fd = np.zeros(Rf.size)
    for i in range(Rf.size):
        up, dn = Rf.ravel().copy(), Rf.ravel().copy()
        up[i] += 1e-5
        dn[i] -= 1e-5
        fd[i] = (f_frozen(up) - f_frozen(dn)) / 2e-5
    assert rel_error(grad.ravel(), fd) < 1e-5


def test_epsilon_zero_equals_backbone_exactly():
    R_real, Rf, targets, cfg = make_instance(seed=47)
    _, with_zero_eps = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0)
    _, explicit_none = analytic_hypergradient(
        R_real, Rf, targets, cfg, 0.0,
        frozen_perturbation=SamPerturbation(np.zeros(0), 0.0),
    )
    assert np.array_equal(with_zero_eps, explicit_none)


def test_truncated_unroll_partial_gradient():
    R_real, Rf, targets, cfg = make_instance(seed=48, T=3)
    _, full = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0, unroll_steps=None)
    _, one = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0, unroll_steps=1)
    assert one.any()
    assert not np.allclose(full, one)


def test_shape_mismatch_rejected():
    R_real, Rf, targets, cfg = make_instance(seed=49)
    model, poisoned = train(R_real, Rf, cfg)
    weights = confidence_weights(poisoned, 1.0, 0.05)
    objective = lambda s: full_user_loss(s, targets)
    with pytest.raises(ValueError, match="shape"):
        hypergradient(
            model.trajectory_, poisoned[:, :2], weights[:, :2],
            cfg["l2_reg"], cfg["learning_rate"], Rf.shape[0], objective,
        )


def test_checkpointed_trajectory_same_hypergradient():
    R_real, Rf, targets, cfg = make_instance(seed=50, T=6)
    _, full = analytic_hypergradient(R_real, Rf, targets, cfg, 0.0)
    cfg_ckpt = dict(cfg, checkpoint_every=4)
    _, sparse = analytic_hypergradient(R_real, Rf, targets, cfg_ckpt, 0.0)
    assert np.array_equal(full, sparse)
