"""
Desk-scale acceptance runs on the synthetic dataset.

Each test trains the default model several times and checks zero-shot
transfer to unseen classes or the direction of an ablation. Takes minutes;
deselect with ``-m "not acceptance"``.
"""

import numpy as np
import pytest

from core.data_1_2_0.features import load_features
from core.data_1_2_0.synth import SynthSpec, synth_gen
from core.evaluation_1_6_0.evaluator import eval_zsl
from core.model_1_4_0.model import ModelConfig
from core.training_1_5_0.sweeps import SweepData, run_sweep
from core.training_1_5_0.trainer import TrainConfig, fit

SEEDS = (0, 1, 2)
SWEEP_SEEDS = [0, 1, 2, 3, 4]
CHANCE = 0.25
EPOCHS = 200


@pytest.fixture(scope="module")
def default_bundle():
    return synth_gen(seed=7, spec=SynthSpec())


def _key(rec):
    return rec.class_name, np.asarray(rec.features, dtype="<f4").tobytes()


@pytest.mark.integration
@pytest.mark.acceptance
def test_zero_shot_transfer_on_default_synth(default_bundle, tmp_path):
    """Test training and unseen-class transfer end to end.

    This test verifies that:
    1. The trained model fits the seen images it trained on (per-class top-1 >= 0.95)
    2. Unseen ZSL top-1 averaged over three seeds is at least 0.60, well above chance
    """
    bundle = default_bundle
    train_t1, unseen_t1 = [], []
    for seed in SEEDS:
        state = fit(bundle.features["train"], bundle.features["val"], bundle.corpus, bundle.table,
                    ModelConfig(seed=seed), TrainConfig(seed=seed, epochs=EPOCHS, patience=EPOCHS),
                    tmp_path / f"seed{seed}")
        held = {_key(rec) for rec in load_features(state.heldout_path)}
        trained = [rec for rec in bundle.features["train"] if _key(rec) not in held]
        train_t1.append(eval_zsl(state.model, trained, bundle.corpus, bundle.table, split="seen").zsl_t1)
        unseen_t1.append(eval_zsl(state.model, bundle.features["test_unseen"], bundle.corpus,
                                  bundle.table).zsl_t1)

    assert np.mean(train_t1) >= 0.95
    assert np.mean(unseen_t1) >= 0.60
    assert np.mean(unseen_t1) > CHANCE


@pytest.mark.integration
@pytest.mark.acceptance
def test_more_views_help_when_each_view_is_partial(tmp_path):
    """Test the benefit of several views.

    Each view names two of a class's three attributes, so one view never
    describes the whole class.

    This test verifies that:
    1. Mean unseen top-1 with q=3 exceeds q=1 by at least 3 points over five seeds
    """
    bundle = synth_gen(seed=7, spec=SynthSpec(attrs_per_view=2))
    result = run_sweep("q", [1, 3], SWEEP_SEEDS, ModelConfig(), TrainConfig(epochs=EPOCHS),
                       SweepData.from_bundle(bundle), tmp_path)
    one_view, three_views = result.rows
    assert three_views.mean - one_view.mean >= 0.03


@pytest.mark.integration
@pytest.mark.acceptance
def test_local_loss_does_not_hurt(default_bundle, tmp_path):
    """Test the local-search loss ablation.

    This test verifies that:
    1. lambda_local=1 matches or beats lambda_local=0 on unseen top-1 in at least four of five seeds
    """
    result = run_sweep("lambda_local", [1.0, 0.0], SWEEP_SEEDS, ModelConfig(), TrainConfig(epochs=EPOCHS),
                       SweepData.from_bundle(default_bundle), tmp_path)
    with_local, without_local = result.rows
    wins = sum(a >= b for a, b in zip(with_local.scores, without_local.scores))
    assert wins >= 4
