"""
Cross-modal local search: image patches query the multi-view summary.
"""

import numpy as np

from core.model_1_4_0.layers import attend
from core.model_1_4_0.summaries import summary_tokens
from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.nn import FeedForward, Linear, Module
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import ShapeError


class LocalSearch(Module):
    """Single-head patch-to-summary attention, attention pooling and a scalar head.

    Shapes for B images and C classes:
        patches (B×N×r), summaries (C×T×r) → scores (B×C)
    """

    def __init__(self, dim: int, rng: np.random.Generator):
        self.wq = Linear(dim, dim, rng, bias=False)
        self.wk = Linear(dim, dim, rng, bias=False)
        self.wv = Linear(dim, dim, rng, bias=False)
        self.query = summary_tokens(rng, 1, dim)
        self.pool_key = Linear(dim, dim, rng, bias=False)
        self.pool_value = Linear(dim, dim, rng, bias=False)
        self.mlp = FeedForward(dim, dim, dim, rng)
        self.head = Linear(dim, 1, rng, bias=False)
        self.last_weights = None

    def search(self, patches: Tensor, summaries: Tensor) -> Tensor:
        """Multi-view patch features I_mvpatch of shape B×C×N×r."""
        if patches.ndim != 3 or summaries.ndim != 3 or patches.shape[-1] != summaries.shape[-1]:
            raise ShapeError(f"local search needs B×N×r patches and C×T×r summaries, got {patches.shape} and {summaries.shape}")
        b, n, r = patches.shape
        c, t, _ = summaries.shape
        q = ops.reshape(self.wq(patches), (b, 1, n, r))
        k = ops.reshape(self.wk(summaries), (1, c, t, r))
        v = ops.reshape(self.wv(summaries), (1, c, t, r))
        out, weights = attend(q, k, v, 1.0 / np.sqrt(r))
        self.last_weights = weights.data
        return out

    def pool(self, mv_patches: Tensor) -> Tensor:
        """Attention pooling of B×C×N×r with the learned query → B×C×r."""
        r = mv_patches.shape[-1]
        keys = self.pool_key(mv_patches)
        values = self.pool_value(mv_patches)
        logits = ops.matmul(keys, ops.reshape(self.query, (r, 1))) * (1.0 / np.sqrt(r))
        weights = ops.softmax(logits, axis=-2)
        return ops.sum(weights * values, axis=-2)

    def __call__(self, patches: Tensor, summaries: Tensor) -> Tensor:
        pooled = self.pool(self.search(patches, summaries))
        fused = pooled + self.mlp(pooled)
        scores = self.head(fused)
        return ops.reshape(scores, scores.shape[:-1])
