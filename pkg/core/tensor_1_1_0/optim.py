"""
Adam optimizer.

Moments are keyed by parameter identity, so one AdamState serves a fixed
parameter set for the lifetime of a training run.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterable, Sequence

import numpy as np

from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import UninitializedGradientError


@dataclass
class AdamState:
    """First/second moment buffers and the step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[int, np.ndarray] = field(default_factory=dict)
    v: Dict[int, np.ndarray] = field(default_factory=dict)


def adam_step(params: Iterable[Tensor], state: AdamState) -> None:
    """Apply one bias-corrected Adam update in place, then clear gradients.

    A parameter whose gradient is all zeros is left alone, moments included.
    The step count advances when any parameter is updated.

    Raises:
        UninitializedGradientError: If any parameter has no gradient.
    """
    params = list(params)
    missing = [p.name or repr(p) for p in params if p.grad is None]
    if missing:
        raise UninitializedGradientError(f"No gradient for parameter(s): {', '.join(missing[:5])}")

    live = []
    for p in params:
        if np.any(p.grad):
            live.append(p)
        else:
            p.grad = None
    if not live:
        return

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t
    for p in live:
        key = id(p)
        m = state.m.get(key)
        if m is None:
            m = state.m[key] = np.zeros_like(p.data)
            state.v[key] = np.zeros_like(p.data)
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * p.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * p.grad ** 2
        m_hat = m / correction1
        v_hat = v / correction2
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        p.grad = None


class Adam:
    """Adam over a fixed parameter list."""

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()
