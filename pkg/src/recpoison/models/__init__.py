from .base import ImplicitRecommender, topk_from_scores
from .bpr import BPR, bpr_triple_loss
from .lightgcn import LightGCN, lightgcn_propagate, normalized_adjacency
from .wrmf import WRMF, TrainingTrajectory, confidence_weights, wrmf_hvp, wrmf_loss

__all__ = [
    "ImplicitRecommender",
    "topk_from_scores",
    "BPR",
    "bpr_triple_loss",
    "LightGCN",
    "lightgcn_propagate",
    "normalized_adjacency",
    "WRMF",
    "TrainingTrajectory",
    "confidence_weights",
    "wrmf_hvp",
    "wrmf_loss",
]
