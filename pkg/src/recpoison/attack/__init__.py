from .baselines import PopularProfileAttack, RandomProfileAttack
from .bound import TransferBoundReport, estimate_lipschitz, verify_transfer_bound
from .objectives import attack_loss_theta, full_user_loss, group_loss, group_miss_mask
from .profiles import (
    FakeProfiles,
    fake_user_count,
    init_fake_profiles,
    load_fake_profiles,
    project_topn,
    save_fake_profiles,
)
from .sam import SamPerturbation, sam_perturbation
from .sharpap import SharpAPAttack
from .unroll import hypergradient

__all__ = [
    "PopularProfileAttack",
    "RandomProfileAttack",
    "TransferBoundReport",
    "estimate_lipschitz",
    "verify_transfer_bound",
    "attack_loss_theta",
    "full_user_loss",
    "group_loss",
    "group_miss_mask",
    "FakeProfiles",
    "fake_user_count",
    "init_fake_profiles",
    "load_fake_profiles",
    "project_topn",
    "save_fake_profiles",
    "SamPerturbation",
    "sam_perturbation",
    "SharpAPAttack",
    "hypergradient",
]
