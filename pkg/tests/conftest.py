from dotenv import load_dotenv
load_dotenv()

import numpy as np
import pytest

from core.data_1_2_0.synth import SynthSpec, synth_gen, write_synth_bundle
from core.model_1_4_0.model import ModelConfig
from core.training_1_5_0.trainer import TrainConfig

# 11 seen classes over 10 attributes always cover at least 6 attributes, which
# leaves room for the 4 val/unseen attribute pairs.
SMALL_SPEC = dict(
    n_attributes=10,
    noise_vocab=6,
    n_seen=11,
    n_val=2,
    n_unseen=2,
    attrs_per_class=2,
    images_per_class=4,
    n_patches=3,
    d_backbone=6,
    embedding_dim=5,
    tokens_per_view=4,
    q=2,
    sigma=0.1,
    train_fraction=0.75,
)

TINY_MODEL = dict(r=8, T=3, text_blocks=1, heads=2, m_max=8, d_backbone=6)


@pytest.fixture(scope="session")
def small_spec():
    return SynthSpec(**SMALL_SPEC)


@pytest.fixture(scope="session")
def small_bundle(small_spec):
    return synth_gen(seed=7, spec=small_spec)


@pytest.fixture(scope="session")
def small_bundle_dir(tmp_path_factory, small_bundle):
    out = tmp_path_factory.mktemp("synth")
    write_synth_bundle(small_bundle, out)
    return out


@pytest.fixture
def tiny_model_config():
    return ModelConfig(**TINY_MODEL)


@pytest.fixture
def quick_train_config():
    return TrainConfig(epochs=2, batch_size=8, lr=1e-2, patience=5)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
