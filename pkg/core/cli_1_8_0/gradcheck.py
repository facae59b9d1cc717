"""
Gradient check of the full model loss on a tiny random problem.
"""

from typing import Callable, Iterable, List, Tuple

import numpy as np

from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.features import PatchFeatureRecord
from core.model_1_4_0.model import ModelConfig, MVFormer
from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.gradcheck import grad_check
from core.tensor_1_1_0.tensor import Tensor
from core.text_1_3_0.embedder import tokenize_view

# r=8, T=3, q=2, N=4 patches, views of at most 6 tokens, 3 classes
TINY_MODEL = {
    "r": 8,
    "T": 3,
    "text_blocks": 1,
    "heads": 2,
    "m_max": 6,
    "q": 2,
    "d_backbone": 6,
    "embedding_dim": 4,
}
TINY_CLASSES = 3
TINY_PATCHES = 4
TINY_IMAGES = 2
TINY_VOCABULARY = 10
SPREAD = 0.3


def tiny_problem(model_config: ModelConfig) -> Tuple[Callable[[], Tensor], List[Tensor]]:
    """Build a model and a zero-argument joint loss over random inputs.

    Every parameter gets N(0, SPREAD) noise on top of its initialisation, so the
    summary tokens and the pooling query start well apart instead of near zero.
    """
    rng = np.random.default_rng(model_config.seed + 1)
    words = [f"w{i}" for i in range(TINY_VOCABULARY)]
    table = EmbeddingTable(dim=model_config.embedding_dim,
                           entries={w: rng.normal(size=model_config.embedding_dim) for w in words})
    q = model_config.q or 2
    names = [f"c{i}" for i in range(TINY_CLASSES)]
    views = {}
    for name in names:
        views[name] = []
        for _ in range(q):
            length = int(rng.integers(2, model_config.m_max + 1))
            text = " ".join(rng.choice(words, size=length))
            views[name].append(tokenize_view(text, table, m_max=model_config.m_max, class_name=name))
    records = [
        PatchFeatureRecord(class_name=names[i % TINY_CLASSES],
                           features=rng.normal(size=(TINY_PATCHES + 1, model_config.d_backbone)))
        for i in range(TINY_IMAGES)
    ]
    targets = [names.index(rec.class_name) for rec in records]
    model = MVFormer(model_config)
    for p in model.parameters():
        p.data += rng.normal(0.0, SPREAD, size=p.data.shape)

    def loss() -> Tensor:
        images = model.project_images(records)
        classes = model.class_embeddings(names, views)
        return (ops.cross_entropy(model.score_global(images, classes), targets)
                + ops.cross_entropy(model.score_local(images, classes), targets))

    return loss, model.parameters()


def check_model_gradients(model_config: ModelConfig, epsilon: float = 1e-5, broken_ops: Iterable[str] = ()) -> float:
    loss, params = tiny_problem(model_config)
    return grad_check(loss, params, epsilon=epsilon, broken_ops=broken_ops)
