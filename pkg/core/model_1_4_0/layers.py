"""
Transformer building blocks.
"""

from typing import List

import numpy as np

from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.nn import FeedForward, LayerNorm, Linear, Module
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import ShapeError


def attend(q: Tensor, k: Tensor, v: Tensor, scale: float) -> tuple:
    """softmax(q·kᵀ·scale)·v over the last two axes; returns (output, weights)."""
    weights = ops.softmax(ops.matmul(q, ops.transpose(k)) * scale, axis=-1)
    return ops.matmul(weights, v), weights


class MultiHeadSelfAttention(Module):
    """Self-attention with ``heads`` heads split along the model dimension.

    Query/key/value maps carry no bias; the output map does.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator):
        if dim % heads:
            raise ShapeError(f"model dimension {dim} is not divisible by {heads} heads")
        self.heads = heads
        self.wq = Linear(dim, dim, rng, bias=False)
        self.wk = Linear(dim, dim, rng, bias=False)
        self.wv = Linear(dim, dim, rng, bias=False)
        self.wo = Linear(dim, dim, rng)
        self.last_weights: List[np.ndarray] = []

    def __call__(self, x: Tensor) -> Tensor:
        dim = x.shape[-1]
        width = dim // self.heads
        lead = (slice(None),) * (x.ndim - 1)
        q, k, v = self.wq(x), self.wk(x), self.wv(x)
        outputs, self.last_weights = [], []
        for h in range(self.heads):
            cols = lead + (slice(h * width, (h + 1) * width),)
            out, weights = attend(q[cols], k[cols], v[cols], 1.0 / np.sqrt(width))
            outputs.append(out)
            self.last_weights.append(weights.data)
        merged = outputs[0] if self.heads == 1 else ops.concat(outputs, axis=-1)
        return self.wo(merged)


class EncoderBlock(Module):
    """Pre-norm encoder block: x + MHSA(LN(x)), then x + FFN(LN(x)); FFN width 4·dim."""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, eps: float = 1e-5):
        self.norm1 = LayerNorm(dim, eps)
        self.attn = MultiHeadSelfAttention(dim, heads, rng)
        self.norm2 = LayerNorm(dim, eps)
        self.ffn = FeedForward(dim, 4 * dim, dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        x = x + self.attn(self.norm1(x))
        return x + self.ffn(self.norm2(x))
