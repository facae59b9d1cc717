"""Reverse-mode differentiable tensor engine (1.1.0)."""

from core.tensor_1_1_0.tensor import Tape, Tensor, active_tape, as_tensor, backward, no_grad
from core.tensor_1_1_0.optim import Adam, AdamState, adam_step
from core.tensor_1_1_0.gradcheck import grad_check
from core.tensor_1_1_0 import nn, ops

__all__ = [
    "Adam",
    "AdamState",
    "Tape",
    "Tensor",
    "active_tape",
    "adam_step",
    "as_tensor",
    "backward",
    "grad_check",
    "nn",
    "no_grad",
    "ops",
]
