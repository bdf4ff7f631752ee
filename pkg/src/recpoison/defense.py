"""A simplified PCA-projection detector for coordinated fake profiles.

This is a deliberately lightweight stand-in for published spectral
defenses: it scores users by the squared norm of their centered interaction
row projected onto the top principal directions, and removes the
highest-scoring fraction. It receives no real/fake labels; precision and
recall are computed afterwards by the evaluation harness.
"""

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, clone

from .evaluation import EvalReport, EvalRow, evaluate_transfer
from .interactions import append_fake_users, subset_rows
from .models.base import as_dense
from .validation import check_seed


@dataclass
class DetectionResult:
    suspected: np.ndarray
    scores: np.ndarray
    threshold: float


class PCADetector(BaseEstimator):
    """Flag the top fraction of users by principal-subspace projection mass."""

    def __init__(self, components=3, remove_fraction=0.02, power_iters=50, seed=0):
        self.components = components
        self.remove_fraction = remove_fraction
        self.power_iters = power_iters
        self.seed = seed

    def fit(self, R):
        if self.components < 1:
            raise ValueError("components must be >= 1")
        if not 0 < self.remove_fraction < 1:
            raise ValueError("remove_fraction must lie in (0, 1)")
        X = as_dense(R)
        n_users, n_items = X.shape
        Xc = X - X.mean(axis=0, keepdims=True)
        k = self.components
        if k > min(n_users, n_items):
            warnings.warn(
                f"components={k} exceeds matrix rank bound {min(n_users, n_items)}, clamping",
                stacklevel=2,
            )
            k = min(n_users, n_items)
        rng = check_seed(self.seed)
        basis = rng.standard_normal((n_items, k))
        basis, _ = np.linalg.qr(basis)
        # orthogonal iteration on the item-item covariance (X^T X, scale-free)
        for _ in range(self.power_iters):
            basis = Xc.T @ (Xc @ basis)
            basis, _ = np.linalg.qr(basis)
        eigvals = np.sum((Xc @ basis) ** 2, axis=0)
        live = eigvals > 1e-12 * max(eigvals.max(initial=0.0), 1.0)
        if not live.all():
            warnings.warn(
                f"components beyond matrix rank carry no variance, clamping to {int(live.sum())}",
                stacklevel=2,
            )
            basis = basis[:, live]
        proj = Xc @ basis
        scores = np.sum(proj * proj, axis=1)
        n_flag = int(np.ceil(self.remove_fraction * n_users))
        order = np.lexsort((np.arange(n_users), -scores))
        flagged = np.sort(order[:n_flag])
        self.scores_ = scores
        self.flagged_ = flagged
        self.threshold_ = float(scores[order[n_flag - 1]]) if n_flag else float("inf")
        self.components_ = basis
        return self

    def detect(self, R):
        self.fit(R)
        return DetectionResult(self.flagged_, self.scores_, self.threshold_)


def remove_users(m, user_indices):
    """Zero out the given users' interactions, keeping both index spaces."""
    drop = set(int(u) for u in np.asarray(user_indices).ravel())
    rows = [
        np.empty(0, np.int64) if u in drop else m.rows[u] for u in range(m.num_users)
    ]
    return subset_rows(m, rows)


def detection_quality(flagged, num_real, num_fake):
    """Post-hoc precision/recall, fake users occupying the trailing indices."""
    flagged = np.asarray(flagged, dtype=np.int64)
    true_fake = flagged >= num_real
    tp = int(true_fake.sum())
    precision = tp / flagged.size if flagged.size else 0.0
    recall = tp / num_fake if num_fake else 0.0
    return precision, recall


def evaluate_under_defense(
    split,
    attacks,
    victims,
    targets,
    detector,
    metrics=("hr", "ndcg"),
    ks=(10, 20),
    repeats=10,
    seed=0,
    groups=None,
    threads=1,
):
    """Detector-filtered analogue of evaluate_transfer.

    For each attacker the detector runs label-blind on the poisoned train
    matrix; flagged users (real or fake) lose their interactions before the
    victims retrain. Victim rows carry a ``+pca`` suffix so defended and
    undefended reports can sit side by side, and per-attacker detection
    precision/recall are appended as auxiliary rows.
    """
    report = None
    for attacker, profiles in sorted(dict(attacks).items()):
        if profiles is None:
            poisoned = split.train
            num_fake = 0
        else:
            poisoned = append_fake_users(split.train, profiles.discrete)
            num_fake = profiles.num_fake
        det = clone(detector)
        result = det.detect(poisoned)
        n_real = split.train.num_users
        flagged_real = result.suspected[result.suspected < n_real]
        cleaned_real = remove_users(split.train, flagged_real)
        fp = None
        if profiles is not None:
            # flagged fake users are dropped outright (they occupy the
            # trailing rows, so real indices are untouched); flagged real
            # users keep their index with an emptied row
            flagged_fake = set(int(u) - n_real for u in result.suspected if u >= n_real)
            keep = [j for j in range(profiles.num_fake) if j not in flagged_fake]
            survivors = profiles.discrete[keep]
            fp = type(profiles)(
                survivors.copy(), survivors, profiles.target_items, profiles.max_interactions
            )
        defended_split = type(split)(train=cleaned_real, validation=split.validation, test=split.test)
        sub = evaluate_transfer(
            defended_split,
            {attacker: fp},
            victims,
            targets,
            metrics=metrics,
            ks=ks,
            repeats=repeats,
            seed=seed,
            groups=groups,
            threads=threads,
            include_clean=False,
        )
        precision, recall = detection_quality(
            result.suspected, split.train.num_users, num_fake
        )
        if report is None:
            report = EvalReport(rows=[], seeds=sub.seeds, config_fingerprint=sub.config_fingerprint)
        for row in sub.rows:
            if row.attacker != attacker:
                continue  # drop the implicit clean control of the sub-call
            row.victim = f"{row.victim}+pca"
            report.rows.append(row)
        report.rows.append(
            EvalRow(attacker, "detector", "precision", 0, precision, 0.0, [precision])
        )
        report.rows.append(
            EvalRow(attacker, "detector", "recall", 0, recall, 0.0, [recall])
        )
    return report


def detection_to_csv(result, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    flagged = set(int(u) for u in result.suspected)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_index", "score", "flagged"])
        for u, score in enumerate(result.scores):
            writer.writerow([u, f"{score:.10g}", int(u in flagged)])
