"""Poisoning attacks on implicit-feedback recommenders and their evaluation."""

from .attack import (
    FakeProfiles,
    PopularProfileAttack,
    RandomProfileAttack,
    SharpAPAttack,
    full_user_loss,
    group_loss,
    hypergradient,
    project_topn,
    sam_perturbation,
    verify_transfer_bound,
)
from .datasets import synthetic_interactions
from .defense import PCADetector, evaluate_under_defense
from .embeddings import EmbeddingParams, init_embeddings, load_embeddings, save_embeddings
from .evaluation import EvalReport, evaluate_transfer
from .interactions import (
    DatasetStats,
    InteractionMatrix,
    Split,
    UserGroups,
    binarize_explicit,
    dataset_stats,
    group_users,
    k_core_filter,
    load_interactions,
    load_ratings,
    sample_target_items,
    save_triplets,
    split_dataset,
)
from .landscape import LandscapeGrid, loss_landscape_grid, sharpness_score
from .metrics import group_difference, hit_ratio_at_k, ndcg_at_k
from .models import BPR, WRMF, LightGCN

__version__ = "0.1.0"

__all__ = [
    "FakeProfiles",
    "PopularProfileAttack",
    "RandomProfileAttack",
    "SharpAPAttack",
    "full_user_loss",
    "group_loss",
    "hypergradient",
    "project_topn",
    "sam_perturbation",
    "verify_transfer_bound",
    "synthetic_interactions",
    "PCADetector",
    "evaluate_under_defense",
    "EmbeddingParams",
    "init_embeddings",
    "load_embeddings",
    "save_embeddings",
    "EvalReport",
    "evaluate_transfer",
    "DatasetStats",
    "InteractionMatrix",
    "Split",
    "UserGroups",
    "binarize_explicit",
    "dataset_stats",
    "group_users",
    "k_core_filter",
    "load_interactions",
    "load_ratings",
    "sample_target_items",
    "save_triplets",
    "split_dataset",
    "LandscapeGrid",
    "loss_landscape_grid",
    "sharpness_score",
    "group_difference",
    "hit_ratio_at_k",
    "ndcg_at_k",
    "BPR",
    "WRMF",
    "LightGCN",
    "__version__",
]
