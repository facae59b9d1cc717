"""Tests for the Adam optimizer."""
import numpy as np
import pytest

from core.tensor_1_1_0.optim import Adam, AdamState, adam_step
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import UninitializedGradientError


def test_zero_gradient_is_a_no_op():
    """Test Adam with a zero gradient.

    This test verifies that:
    1. Parameter values are bit-identical after the step
    2. The step counter does not advance and the gradient is cleared
    """
    p = Tensor(np.array([0.25, -1.5, 3.0]), requires_grad=True)
    before = p.data.copy()
    p.grad = np.zeros(3)
    state = AdamState(lr=0.1)
    adam_step([p], state)
    np.testing.assert_array_equal(p.data, before)
    assert state.t == 0
    assert p.grad is None


def test_zero_gradient_with_warm_moments():
    """Test a zero gradient after real updates.

    This test verifies that:
    1. A parameter with a zero gradient keeps its values and moments
    2. A parameter updated in the same step still moves
    """
    a = Tensor(np.array([1.0, 2.0]), requires_grad=True)
    b = Tensor(np.array([-1.0]), requires_grad=True)
    state = AdamState(lr=0.1)
    for _ in range(3):
        a.grad, b.grad = np.array([0.5, -0.5]), np.array([2.0])
        adam_step([a, b], state)
    before, moments = a.data.copy(), (state.m[id(a)].copy(), state.v[id(a)].copy())
    b_before = b.data.copy()
    a.grad, b.grad = np.zeros(2), np.array([2.0])
    adam_step([a, b], state)
    np.testing.assert_array_equal(a.data, before)
    np.testing.assert_array_equal(state.m[id(a)], moments[0])
    np.testing.assert_array_equal(state.v[id(a)], moments[1])
    assert state.t == 4
    assert b.data[0] < b_before[0]


@pytest.mark.parametrize("g", [2.5, -0.003])
def test_first_step_moves_by_lr(g):
    """Test the first bias-corrected step.

    This test verifies that:
    1. After one step the parameter moves by lr against the sign of the gradient
    2. The gradient is cleared
    """
    p = Tensor(1.0, requires_grad=True)
    p.grad = np.array(g)
    adam_step([p], AdamState(lr=0.01))
    assert float(p.data) == pytest.approx(1.0 - 0.01 * np.sign(g), abs=1e-6)
    assert p.grad is None


def test_quadratic_converges():
    """Test Adam on f(w) = (w - 3)^2.

    This test verifies that:
    1. 100 steps from w = 0 at lr = 0.1 end within 0.1 of the minimum
    """
    w = Tensor(0.0, requires_grad=True)
    opt = Adam([w], lr=0.1)
    for _ in range(100):
        w.grad = 2.0 * (w.data - 3.0)
        opt.step()
    assert abs(float(w.data) - 3.0) < 0.1


def test_missing_gradient_raises():
    """Test the uninitialised-gradient error.

    This test verifies that:
    1. A parameter without a gradient raises UninitializedGradientError naming it
    2. No parameter is updated
    """
    a = Tensor(1.0, requires_grad=True, name="a")
    b = Tensor(2.0, requires_grad=True, name="b")
    a.grad = np.array(1.0)
    with pytest.raises(UninitializedGradientError, match="b"):
        Adam([a, b]).step()
    assert float(a.data) == 1.0
