"""
Tensor and Tape: the reverse-mode differentiation substrate.

A Tensor wraps a float64 numpy array. Operations executed while a Tape is
active (``with Tape() as tape:``) are recorded in execution order together
with their local gradient rules; ``backward(loss, tape)`` replays them in
reverse. Outside a tape, or inside ``no_grad()``, operations are plain
numpy computations.
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np

from core.utils.errors import NumericError, RankError, TapeConsumedError, TapeError
from core.utils.logging import get_logger

logger = get_logger(__name__)

DTYPE = np.float64

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("active_tape", default=None)

GradRule = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Dense n-dimensional float64 array with an optional gradient."""

    __slots__ = ("data", "requires_grad", "grad", "name")
    __array_priority__ = 100

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None):
        self.data = np.array(data, dtype=DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise RankError(f"item() needs a single value, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(array, dtype=DTYPE)
        out.requires_grad = requires_grad
        out.grad = None
        out.name = None
        return out

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # Operator sugar; the rules live in ops.py.
    def __add__(self, other):
        from core.tensor_1_1_0 import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from core.tensor_1_1_0 import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from core.tensor_1_1_0 import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from core.tensor_1_1_0 import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float):
        from core.tensor_1_1_0 import ops
        return ops.mul(self, 1.0 / float(scalar))

    def __neg__(self):
        from core.tensor_1_1_0 import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from core.tensor_1_1_0 import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from core.tensor_1_1_0 import ops
        return ops.getitem(self, index)

    @property
    def T(self) -> "Tensor":
        from core.tensor_1_1_0 import ops
        return ops.transpose(self)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from core.tensor_1_1_0 import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from core.tensor_1_1_0 import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        from core.tensor_1_1_0 import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)


def as_tensor(value) -> Tensor:
    """Wrap constants so they can enter an operation."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


@dataclass
class _Record:
    op: str
    output: Tensor
    inputs: Tuple[Tensor, ...]
    rule: GradRule


class Tape:
    """Ordered record of executed operations.

    Args:
        broken_ops: Operation names whose gradient rule is deliberately
            doubled. Used as a negative control for the gradient checker.
    """

    def __init__(self, broken_ops: Iterable[str] = ()):
        self._records: list[_Record] = []
        self._produced: set[int] = set()
        self._consumed = False
        self._token = None
        self.broken_ops = frozenset(broken_ops)

    def __enter__(self) -> "Tape":
        if self._consumed:
            raise TapeConsumedError("This tape has already been consumed by backward")
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self._records)

    @property
    def consumed(self) -> bool:
        return self._consumed

    def produced(self, tensor: Tensor) -> bool:
        return id(tensor) in self._produced

    def record(self, op: str, output: Tensor, inputs: Tuple[Tensor, ...], rule: GradRule) -> None:
        if self._consumed:
            raise TapeConsumedError("Cannot record on a consumed tape")
        self._records.append(_Record(op, output, inputs, rule))
        self._produced.add(id(output))

    def backward(self, loss: Tensor) -> None:
        backward(loss, self)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


@contextmanager
def no_grad():
    """Suspend recording: operations inside produce constants."""
    token = _ACTIVE_TAPE.set(None)
    try:
        yield
    finally:
        _ACTIVE_TAPE.reset(token)


def record(op: str, data: np.ndarray, inputs: Tuple[Tensor, ...], rule: GradRule) -> Tensor:
    """Build an operation's output tensor and, when needed, put it on the active tape."""
    tape = _ACTIVE_TAPE.get()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor._wrap(data, requires_grad=tracked)
    if tracked:
        tape.record(op, out, inputs, rule)
    return out


def backward(loss: Tensor, tape: Tape) -> None:
    """Populate ``grad`` on every requires_grad tensor reachable from ``loss``.

    Leaf gradients accumulate into any existing ``grad``; gradients of
    intermediate tensors are overwritten with this pass's value.
    """
    if loss.ndim != 0:
        raise RankError(f"backward needs a scalar loss, got shape {loss.shape}")
    if tape.consumed:
        raise TapeConsumedError("backward already ran on this tape; run a new forward pass")
    if not tape.produced(loss):
        raise TapeError("loss was not produced on this tape")
    if not np.isfinite(loss.data):
        raise NumericError(f"loss is not finite: {float(loss.data)}")

    pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for rec in reversed(tape._records):
        grad = pending.pop(id(rec.output), None)
        if grad is None:
            continue
        rec.output.grad = grad
        input_grads = rec.rule(grad)
        for tensor, g in zip(rec.inputs, input_grads):
            if g is None or not tensor.requires_grad:
                continue
            if rec.op in tape.broken_ops:
                g = 2.0 * g
            key = id(tensor)
            if tape.produced(tensor):
                if key in pending:
                    pending[key] = pending[key] + g
                else:
                    pending[key] = g
            else:
                tensor.grad = g.copy() if tensor.grad is None else tensor.grad + g

    tape._consumed = True
    tape._records.clear()
    tape._produced.clear()
