"""Linear graph-convolution recommender over the user-item bipartite graph."""

import numpy as np
import scipy.sparse as sp

from ..embeddings import EmbeddingParams
from ..interactions import InteractionMatrix
from .base import as_dense
from .bpr import BPR, _fit_pairwise


def normalized_adjacency(R):
    """Symmetric-normalized bipartite adjacency over user+item nodes.

    Edge (u, v) gets weight 1 / sqrt(deg_u * deg_v); zero-degree nodes keep
    zero rows, so their embeddings propagate to zero.
    """
    if isinstance(R, InteractionMatrix):
        csr = R.to_csr()
    else:
        csr = sp.csr_matrix(as_dense(R) > 0.5, dtype=np.float64)
    n_users, n_items = csr.shape
    deg_u = np.asarray(csr.sum(axis=1)).ravel()
    deg_i = np.asarray(csr.sum(axis=0)).ravel()
    inv_u = np.divide(1.0, np.sqrt(deg_u), out=np.zeros_like(deg_u, dtype=np.float64), where=deg_u > 0)
    inv_i = np.divide(1.0, np.sqrt(deg_i), out=np.zeros_like(deg_i, dtype=np.float64), where=deg_i > 0)
    norm_block = sp.diags(inv_u) @ csr @ sp.diags(inv_i)
    n = n_users + n_items
    adj = sp.bmat(
        [[None, norm_block], [norm_block.T, None]], format="csr", dtype=np.float64
    ) if n else sp.csr_matrix((0, 0))
    return adj, n_users, n_items


def lightgcn_propagate(params, adjacency, layers):
    """Layer-mean of repeated propagation e^(l+1) = A_hat e^(l).

    The map is linear and the adjacency symmetric, so it is its own
    transpose: backpropagating an output gradient is another forward call.
    """
    if layers < 0:
        raise ValueError("layers must be >= 0")
    n_users = params.num_users
    x = np.vstack([params.user_emb, params.item_emb])
    acc = x.copy()
    cur = x
    for _ in range(layers):
        cur = adjacency @ cur
        acc += cur
    out = acc / (layers + 1)
    return EmbeddingParams(out[:n_users], out[n_users:])


class LightGCN(BPR):
    """Propagated-embedding ranker; reduces to BPR at layers=0."""

    def __init__(
        self,
        factors=32,
        learning_rate=0.05,
        steps=2000,
        batch_size=128,
        l2_reg=1e-4,
        layers=2,
        init_std=0.01,
        seed=0,
    ):
        super().__init__(
            factors=factors,
            learning_rate=learning_rate,
            steps=steps,
            batch_size=batch_size,
            l2_reg=l2_reg,
            init_std=init_std,
            seed=seed,
        )
        self.layers = layers

    def fit(self, R):
        adjacency, _, _ = normalized_adjacency(R)
        self.adjacency_ = adjacency

        def propagate(p):
            return lightgcn_propagate(p, adjacency, self.layers)

        self.params_ = _fit_pairwise(self, R, propagate, propagate)
        self.propagated_ = propagate(self.params_)
        return self

    def scoring_params(self):
        return self.propagated_
