"""Tests for calibrated inference."""
import numpy as np
import pytest

from core.model_1_4_0.model import ClassEmbeddings, ImageEmbedding, calibrated_argmax, infer
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import ModelError


def _classes(names, v_cls):
    v_cls = np.asarray(v_cls, dtype=float)
    return ClassEmbeddings(names=list(names), v_cls=Tensor(v_cls), v_mv=Tensor(np.zeros((len(names), 2, v_cls.shape[1]))))


def _image(i_cls):
    i_cls = np.asarray(i_cls, dtype=float)
    return ImageEmbedding(i_cls=Tensor(i_cls), i_patch=Tensor(np.zeros(i_cls.shape[:-1] + (3, i_cls.shape[-1]))))


def test_single_candidate():
    """Test inference with one candidate.

    This test verifies that:
    1. The only class is returned whatever the score
    """
    assert infer(_image([1.0, -2.0]), _classes(["zebra"], [[-5.0, 3.0]])) == "zebra"


def test_empty_candidates():
    """Test inference without candidates.

    This test verifies that:
    1. ModelError is raised by infer and calibrated_argmax
    """
    with pytest.raises(ModelError):
        infer(_image([1.0, 0.0]), ClassEmbeddings(names=[], v_cls=Tensor(np.zeros((0, 2))),
                                                  v_mv=Tensor(np.zeros((0, 2, 2)))))
    with pytest.raises(ModelError):
        calibrated_argmax(np.zeros((2, 0)), np.zeros(0, dtype=bool))


def test_gamma_zero_is_plain_argmax(rng):
    """Test the identity calibration.

    This test verifies that:
    1. gzsl with gamma 0 equals argmax over the union
    """
    scores = rng.normal(size=(20, 6))
    mask = np.array([False, False, False, True, True, True])
    np.testing.assert_array_equal(calibrated_argmax(scores, mask, 0.0), scores.argmax(axis=1))


def test_large_gamma_always_picks_unseen(rng):
    """Test the limiting case of calibration.

    This test verifies that:
    1. gamma above max seen minus min unseen score always predicts an unseen class
    """
    scores = rng.normal(size=(30, 5))
    mask = np.array([True, False, True, False, False])
    gamma = scores[:, ~mask].max() - scores[:, mask].min() + 1e-6
    assert mask[calibrated_argmax(scores, mask, gamma)].all()


def test_ties_go_to_the_first_class():
    """Test tie breaking.

    This test verifies that:
    1. Equal scores resolve to the lowest corpus index
    """
    assert calibrated_argmax(np.array([[1.0, 2.0, 2.0]]), np.array([False, False, False]))[0] == 1
    classes = _classes(["a", "b", "c"], [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert infer(_image([1.0, 0.0]), classes) == "a"


def test_infer_modes():
    """Test zsl and gzsl inference on a batch.

    This test verifies that:
    1. zsl ignores gamma
    2. gzsl adds gamma only to the named unseen classes
    """
    classes = _classes(["seen", "unseen"], [[1.0, 0.0], [0.0, 1.0]])
    images = _image([[1.0, 0.5], [0.2, 1.0]])
    assert infer(images, classes, mode="zsl", gamma=10.0, unseen=["unseen"]) == ["seen", "unseen"]
    assert infer(images, classes, mode="gzsl", gamma=0.6, unseen=["unseen"]) == ["unseen", "unseen"]
    assert infer(images, classes, mode="gzsl", gamma=0.6, unseen=[]) == ["seen", "unseen"]
