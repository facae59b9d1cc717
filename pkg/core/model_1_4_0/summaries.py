"""
Summary-token encoders for single views and for the union of a class's views.
"""

import numpy as np

from core.model_1_4_0.layers import EncoderBlock
from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.nn import Module, parameter
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import EmptyViewError, ShapeError


def summary_tokens(rng: np.random.Generator, count: int, dim: int) -> Tensor:
    return parameter(rng.normal(0.0, 0.02, size=(count, dim)))


def _prepend(tokens: Tensor, x: Tensor) -> Tensor:
    """Concatenate learned tokens (T×r) in front of x (...×L×r)."""
    lead = x.shape[:-2]
    if lead:
        tokens = ops.broadcast_to(tokens, lead + tokens.shape)
    return ops.concat([tokens, x], axis=-2)


class SVSummary(Module):
    """Distils one view into T summary tokens.

    Learned positional embeddings are added to the word tokens only; the T
    summary tokens are prepended and the sequence runs through ``blocks``
    encoder blocks. The output rows at the summary positions are returned.
    """

    def __init__(self, dim: int, n_tokens: int, n_blocks: int, heads: int, m_max: int,
                 rng: np.random.Generator, eps: float = 1e-5):
        self.tokens = summary_tokens(rng, n_tokens, dim)
        self.positions = parameter(rng.normal(0.0, 0.02, size=(m_max, dim)))
        self.blocks = [EncoderBlock(dim, heads, rng, eps) for _ in range(n_blocks)]

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]

    def __call__(self, words: Tensor) -> Tensor:
        """words: (...×M×r) projected word tokens → (...×T×r)."""
        m = words.shape[-2]
        if m == 0:
            raise EmptyViewError("cannot summarise a view with no tokens")
        if m > self.positions.shape[0]:
            raise ShapeError(f"view of {m} tokens exceeds the {self.positions.shape[0]} positional slots")
        x = _prepend(self.tokens, words + self.positions[:m])
        for block in self.blocks:
            x = block(x)
        lead = (slice(None),) * (x.ndim - 2)
        return x[lead + (slice(0, self.n_tokens),)]


class MVSummary(Module):
    """Summarises the concatenated local tokens of all views into T tokens (no positions)."""

    def __init__(self, dim: int, n_tokens: int, heads: int, rng: np.random.Generator, eps: float = 1e-5):
        self.tokens = summary_tokens(rng, n_tokens, dim)
        self.block = EncoderBlock(dim, heads, rng, eps)

    def __call__(self, local_tokens: Tensor) -> Tensor:
        """local_tokens: (...×q(T−1)×r) → (...×T×r)."""
        if local_tokens.shape[-1] != self.tokens.shape[1]:
            raise ShapeError(f"local tokens of width {local_tokens.shape[-1]} for model dimension {self.tokens.shape[1]}")
        x = self.block(_prepend(self.tokens, local_tokens))
        lead = (slice(None),) * (x.ndim - 2)
        return x[lead + (slice(0, self.tokens.shape[0]),)]
