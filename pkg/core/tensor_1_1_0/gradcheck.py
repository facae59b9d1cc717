"""
Finite-difference gradient checker.
"""

from time import time
from typing import Callable, Iterable, Sequence

import numpy as np

from core.tensor_1_1_0.tensor import Tape, Tensor, backward, no_grad
from core.utils.errors import NumericError, RankError
from core.utils.logging import get_logger

logger = get_logger(__name__)


def _evaluate(f: Callable[[], Tensor]) -> float:
    with no_grad():
        value = f()
    if value.size != 1:
        raise RankError(f"gradient check needs a scalar function, got shape {value.shape}")
    value = float(value.data.reshape(()))
    if not np.isfinite(value):
        raise NumericError(f"function value is not finite: {value}")
    return value


def grad_check(f: Callable[[], Tensor], params: Sequence[Tensor], epsilon: float = 1e-5,
               broken_ops: Iterable[str] = ()) -> float:
    """Compare analytic and central-difference gradients of ``f`` at ``params``.

    Args:
        f: Zero-argument callable computing a scalar from ``params``.
        params: Tensors whose gradients are checked.
        epsilon: Central-difference step.
        broken_ops: Operation names whose gradient rule is doubled (negative control).

    Returns:
        max over coordinates of |g_a - g_n| / max(1e-8, |g_a| + |g_n|).
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    params = list(params)
    start_time = time()

    saved = [p.grad for p in params]
    for p in params:
        p.grad = None
    with Tape(broken_ops=broken_ops) as tape:
        loss = f()
    backward(loss, tape)
    analytic = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    for p, g in zip(params, saved):
        p.grad = g

    worst = 0.0
    coords = 0
    for p, g_a in zip(params, analytic):
        flat = p.data.flat
        grads = g_a.reshape(-1)
        for i in range(p.data.size):
            original = flat[i]
            flat[i] = original + epsilon
            plus = _evaluate(f)
            flat[i] = original - epsilon
            minus = _evaluate(f)
            flat[i] = original
            g_n = (plus - minus) / (2.0 * epsilon)
            err = abs(grads[i] - g_n) / max(1e-8, abs(grads[i]) + abs(g_n))
            worst = max(worst, err)
            coords += 1

    logger.info(f"Gradient check over {coords} coordinates finished in {time() - start_time:.2f}s, "
                f"max relative error {worst:.3e}")
    return worst
