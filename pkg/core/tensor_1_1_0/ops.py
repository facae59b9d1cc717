"""
Differentiable operations.

Every operation computes its forward value with numpy and hands the tape a
closure mapping the output gradient to one gradient per input (``None`` for
inputs that need none). Broadcasting follows numpy; gradients are summed
back to each input's shape.
"""

from typing import Optional, Sequence, Union

import numpy as np

from core.tensor_1_1_0.tensor import Tensor, as_tensor, record
from core.utils.errors import AxisError, ClassIndexError, DegenerateError, ShapeError

Axis = Optional[Union[int, Sequence[int]]]


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    if lead > 0:
        grad = grad.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _check_axis(axis: int, ndim: int) -> int:
    if not isinstance(axis, (int, np.integer)) or not -ndim <= axis < ndim:
        raise AxisError(f"axis {axis} is out of range for a rank-{ndim} tensor")
    return int(axis) % ndim


def _normalize_axes(axis: Axis, ndim: int) -> tuple:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, (int, np.integer)):
        return (_check_axis(axis, ndim),)
    return tuple(sorted(_check_axis(a, ndim) for a in axis))


# ---------------------------------------------------------------------------
# Elementwise
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data + b.data
    except ValueError as exc:
        raise ShapeError(f"cannot add shapes {a.shape} and {b.shape}") from exc
    return record("add", data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data - b.data
    except ValueError as exc:
        raise ShapeError(f"cannot subtract shapes {a.shape} and {b.shape}") from exc
    return record("sub", data, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    try:
        data = a.data * b.data
    except ValueError as exc:
        raise ShapeError(f"cannot multiply shapes {a.shape} and {b.shape}") from exc
    return record("mul", data, (a, b),
                  lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def neg(x) -> Tensor:
    x = as_tensor(x)
    return record("neg", -x.data, (x,), lambda g: (-g,))


def relu(x) -> Tensor:
    x = as_tensor(x)
    mask = x.data > 0
    return record("relu", np.where(mask, x.data, 0.0), (x,), lambda g: (g * mask,))


# ---------------------------------------------------------------------------
# Linear algebra
# ---------------------------------------------------------------------------

def matmul(a, b) -> Tensor:
    """Matrix product with numpy batch broadcasting over leading axes.

    Gradient rules: dL/da = dL/dc · bᵀ and dL/db = aᵀ · dL/dc.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} @ {b.shape}")
    try:
        data = np.matmul(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} @ {b.shape}") from exc

    def rule(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return record("matmul", data, (a, b), rule)


def dot(a, b) -> Tensor:
    """Inner product of two vectors."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"dot needs two vectors of equal length, got {a.shape} and {b.shape}")
    return record("dot", np.dot(a.data, b.data), (a, b), lambda g: (g * b.data, g * a.data))


# ---------------------------------------------------------------------------
# Shape manipulation
# ---------------------------------------------------------------------------

def transpose(x, axes: Optional[Sequence[int]] = None) -> Tensor:
    """Permute axes; by default swap the last two."""
    x = as_tensor(x)
    if axes is None:
        if x.ndim < 2:
            raise AxisError(f"transpose needs rank >= 2, got shape {x.shape}")
        axes = list(range(x.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = [_check_axis(a, x.ndim) for a in axes]
    if sorted(axes) != list(range(x.ndim)):
        raise AxisError(f"{axes} is not a permutation of the axes of shape {x.shape}")
    inverse = np.argsort(axes)
    return record("transpose", np.transpose(x.data, axes), (x,),
                  lambda g: (np.transpose(g, inverse),))


def reshape(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        data = x.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {x.shape} into {tuple(shape)}") from exc
    return record("reshape", data, (x,), lambda g: (g.reshape(x.shape),))


def broadcast_to(x, shape: Sequence[int]) -> Tensor:
    x = as_tensor(x)
    try:
        data = np.broadcast_to(x.data, tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"cannot broadcast {x.shape} to {tuple(shape)}") from exc
    return record("broadcast_to", data, (x,), lambda g: (_unbroadcast(g, x.shape),))


def getitem(x, index) -> Tensor:
    x = as_tensor(x)
    try:
        data = x.data[index]
    except IndexError as exc:
        raise ShapeError(f"index {index!r} is invalid for shape {x.shape}") from exc

    basic = _is_basic_index(index)

    def rule(g):
        full = np.zeros_like(x.data)
        if basic:
            full[index] += g
        else:
            np.add.at(full, index, g)
        return (full,)

    return record("getitem", data, (x,), rule)


def _is_basic_index(index) -> bool:
    parts = index if isinstance(index, tuple) else (index,)
    return all(p is None or p is Ellipsis or isinstance(p, (int, np.integer, slice)) for p in parts)


def take(x, indices: Sequence[int], axis: int = 0) -> Tensor:
    """Gather entries along ``axis``; repeated indices accumulate gradient."""
    x = as_tensor(x)
    axis = _check_axis(axis, x.ndim)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and (idx.min() < -x.shape[axis] or idx.max() >= x.shape[axis]):
        raise ShapeError(f"take indices out of range for axis {axis} of shape {x.shape}")

    def rule(g):
        full = np.zeros_like(x.data)
        np.add.at(np.moveaxis(full, axis, 0), idx, np.moveaxis(g, axis, 0))
        return (full,)

    return record("take", np.take(x.data, idx, axis=axis), (x,), rule)


def concat(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    axis = _check_axis(axis, tensors[0].ndim)
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in tensors]
        raise ShapeError(f"cannot concatenate shapes {shapes} along axis {axis}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return record("concat", data, tensors, lambda g: tuple(np.split(g, bounds, axis=axis)))


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    if not tensors:
        raise ShapeError("stack needs at least one tensor")
    try:
        data = np.stack([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"cannot stack shapes {[t.shape for t in tensors]}") from exc
    axis = axis % data.ndim
    return record("stack", data, tensors,
                  lambda g: tuple(np.moveaxis(g, axis, 0)[i] for i in range(len(tensors))))


# ---------------------------------------------------------------------------
# Reductions
# ---------------------------------------------------------------------------

def sum(x, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    data = x.data.sum(axis=axes, keepdims=keepdims)

    def rule(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, x.shape),)

    return record("sum", data, (x,), rule)


def mean(x, axis: Axis = None, keepdims: bool = False) -> Tensor:
    x = as_tensor(x)
    axes = _normalize_axes(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return mul(sum(x, axis=axes, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------------------
# Normalisation and losses
# ---------------------------------------------------------------------------

def softmax(x, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` with max-subtraction."""
    x = as_tensor(x)
    axis = _check_axis(axis, x.ndim)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return record("softmax", y, (x,),
                  lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),))


def log_softmax(x, axis: int = -1) -> Tensor:
    x = as_tensor(x)
    axis = _check_axis(axis, x.ndim)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
    y = shifted - lse
    p = np.exp(y)
    return record("log_softmax", y, (x,),
                  lambda g: (g - p * g.sum(axis=axis, keepdims=True),))


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalise the last axis to zero mean and unit variance, then apply gain and bias."""
    x, gain, bias = as_tensor(x), as_tensor(gain), as_tensor(bias)
    r = x.shape[-1] if x.ndim else 0
    if gain.shape != (r,) or bias.shape != (r,):
        raise ShapeError(f"layer_norm gain/bias {gain.shape}/{bias.shape} do not match last dimension of {x.shape}")
    if eps < 0:
        raise DegenerateError(f"layer_norm eps must be non-negative, got {eps}")
    centred = x.data - x.data.mean(axis=-1, keepdims=True)
    var = (centred ** 2).mean(axis=-1, keepdims=True)
    if eps == 0 and (r == 1 or np.any(var == 0)):
        raise DegenerateError("layer_norm with eps=0 on a zero-variance row divides by zero")
    inv = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv
    lead = tuple(range(x.ndim - 1))

    def rule(g):
        dgain = (g * xhat).sum(axis=lead)
        dbias = g.sum(axis=lead)
        dxhat = g * gain.data
        dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
        return dx, dgain, dbias

    return record("layer_norm", xhat * gain.data + bias.data, (x, gain, bias), rule)


def cross_entropy(scores, target) -> Tensor:
    """Softmax cross-entropy.

    ``scores`` of shape (C,) with an integer target gives -log softmax(scores)[target].
    ``scores`` of shape (B, C) with B targets gives the mean over rows.
    The gradient is the softmax probabilities minus the one-hot target.
    """
    scores = as_tensor(scores)
    if scores.ndim == 1:
        batch = scores.data[None, :]
        targets = np.asarray([target], dtype=np.intp)
    elif scores.ndim == 2:
        batch = scores.data
        targets = np.asarray(target, dtype=np.intp).reshape(-1)
        if targets.shape[0] != batch.shape[0]:
            raise ShapeError(f"{targets.shape[0]} targets for {batch.shape[0]} score rows")
    else:
        raise ShapeError(f"cross_entropy needs a vector or a matrix of scores, got {scores.shape}")
    n_classes = batch.shape[1]
    bad = (targets < 0) | (targets >= n_classes)
    if np.any(bad):
        raise ClassIndexError(f"target index {targets[bad][0]} outside [0, {n_classes})")

    shifted = batch - batch.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    logp = shifted - lse
    rows = np.arange(batch.shape[0])
    loss = -logp[rows, targets].mean()

    def rule(g):
        p = np.exp(logp)
        p[rows, targets] -= 1.0
        return ((g * p / batch.shape[0]).reshape(scores.shape),)

    return record("cross_entropy", np.asarray(loss), (scores,), rule)
