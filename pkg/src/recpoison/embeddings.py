"""Embedding parameter block shared by every recommender.

The flat-vector view is what the attack layer perturbs and differentiates;
round-tripping flatten/unflatten must be lossless.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_MAGIC = b"RECPEMB\x00"
_VERSION = 1


@dataclass
class EmbeddingParams:
    """User and item embedding matrices of a common dimension d."""

    user_emb: np.ndarray
    item_emb: np.ndarray

    def __post_init__(self):
        self.user_emb = np.ascontiguousarray(self.user_emb, dtype=np.float64)
        self.item_emb = np.ascontiguousarray(self.item_emb, dtype=np.float64)
        if self.user_emb.ndim != 2 or self.item_emb.ndim != 2:
            raise ValueError("embeddings must be 2-D")
        if self.user_emb.shape[1] != self.item_emb.shape[1]:
            raise ValueError("user and item embedding dimensions differ")

    @property
    def num_users(self):
        return self.user_emb.shape[0]

    @property
    def num_items(self):
        return self.item_emb.shape[0]

    @property
    def d(self):
        return self.user_emb.shape[1]

    def flatten(self):
        return np.concatenate([self.user_emb.ravel(), self.item_emb.ravel()])

    def like(self, flat):
        """Reshape a flat vector back into this parameter block's shapes."""
        flat = np.asarray(flat, dtype=np.float64)
        n_u = self.user_emb.size
        if flat.size != n_u + self.item_emb.size:
            raise ValueError("flat vector size mismatch")
        return EmbeddingParams(
            flat[:n_u].reshape(self.user_emb.shape).copy(),
            flat[n_u:].reshape(self.item_emb.shape).copy(),
        )

    def copy(self):
        return EmbeddingParams(self.user_emb.copy(), self.item_emb.copy())

    def is_finite(self):
        return bool(np.isfinite(self.user_emb).all() and np.isfinite(self.item_emb).all())

    def fingerprint(self):
        import hashlib

        h = hashlib.sha256()
        h.update(self.user_emb.tobytes())
        h.update(self.item_emb.tobytes())
        return h.hexdigest()


def init_embeddings(num_users, num_items, d, seed, std=0.01):
    """Seeded Gaussian(0, std) initialization."""
    rng = np.random.default_rng(int(seed))
    return EmbeddingParams(
        std * rng.standard_normal((num_users, d)),
        std * rng.standard_normal((num_items, d)),
    )


def save_embeddings(params, path):
    """Write the binary format: magic, version/num_users/num_items/d as
    little-endian uint64, then row-major float64 user block and item block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4Q", _VERSION, params.num_users, params.num_items, params.d))
        fh.write(params.user_emb.astype("<f8").tobytes(order="C"))
        fh.write(params.item_emb.astype("<f8").tobytes(order="C"))


def load_embeddings(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        version, n_users, n_items, d = struct.unpack("<4Q", fh.read(32))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        payload = fh.read()
    expected = (n_users + n_items) * d * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: payload size {len(payload)} != expected {expected}")
    flat = np.frombuffer(payload, dtype="<f8")
    user = flat[: n_users * d].reshape(n_users, d).astype(np.float64)
    item = flat[n_users * d:].reshape(n_items, d).astype(np.float64)
    return EmbeddingParams(user, item)
