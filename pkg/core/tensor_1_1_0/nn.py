"""
Parameter containers and the small layers shared by the text and image towers.
"""

from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import ShapeError


def parameter(data, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Base class: parameters are Tensor attributes with requires_grad set.

    Sub-modules may be attributes or lists of modules; names are dotted paths
    such as ``text.blocks.0.attn.wq``.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for key, value in vars(self).items():
            if isinstance(value, Tensor):
                if value.requires_grad:
                    yield prefix + key, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{key}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{prefix}{key}.{i}.")

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def tag_parameters(self) -> None:
        """Store each parameter's dotted name on the tensor for error messages."""
        for name, p in self.named_parameters():
            p.name = name

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Mapping[str, np.ndarray]) -> None:
        """Copy values in place.

        Raises:
            ShapeError: On missing or unexpected names, or a shape mismatch.
        """
        own = dict(self.named_parameters())
        missing = sorted(set(own) - set(state))
        unexpected = sorted(set(state) - set(own))
        if missing or unexpected:
            raise ShapeError(f"state does not match model: missing {missing[:5]}, unexpected {unexpected[:5]}")
        for name, p in own.items():
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"parameter {name!r} has shape {p.shape}, state holds {value.shape}")
            p.data[...] = value


class Linear(Module):
    """y = x·W (+ b), W of shape in×out."""

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, bias: bool = True):
        self.weight = parameter(uniform_init(rng, in_dim, (in_dim, out_dim)))
        self.bias = parameter(uniform_init(rng, in_dim, (out_dim,))) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        if x.shape[-1] != self.weight.shape[0]:
            raise ShapeError(f"Linear expects last dimension {self.weight.shape[0]}, got input {x.shape}")
        y = ops.matmul(x, self.weight) if x.ndim >= 2 else ops.matmul(ops.reshape(x, (1, -1)), self.weight)[0]
        return y + self.bias if self.bias is not None else y


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        self.gain = parameter(np.ones(dim))
        self.bias = parameter(np.zeros(dim))
        self.eps = eps

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gain, self.bias, self.eps)


class FeedForward(Module):
    """Linear → ReLU → Linear."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, rng: np.random.Generator):
        self.fc1 = Linear(in_dim, hidden_dim, rng)
        self.fc2 = Linear(hidden_dim, out_dim, rng)

    def __call__(self, x: Tensor) -> Tensor:
        return self.fc2(ops.relu(self.fc1(x)))


class ProjectionMLP(Module):
    """Two-layer MLP with ReLU followed by layer normalisation.

    Used for the image feature projection and the word-embedding projection.
    """

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator, eps: float = 1e-5):
        self.mlp = FeedForward(in_dim, out_dim, out_dim, rng)
        self.norm = LayerNorm(out_dim, eps)

    @property
    def in_dim(self) -> int:
        return self.mlp.fc1.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.mlp.fc2.weight.shape[1]

    def __call__(self, x: Tensor) -> Tensor:
        return self.norm(self.mlp(x))
