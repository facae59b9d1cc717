"""Multi-view zero-shot classifier (1.4.0)."""

from core.model_1_4_0.model import (
    ClassEmbeddingBundle,
    ClassEmbeddings,
    ImageEmbedding,
    ModelConfig,
    MVFormer,
    ViewSummary,
    calibrated_argmax,
    class_embeddings,
    infer,
    mv_summary,
    project_image,
    score_global,
    score_local,
    sv_summary,
)

__all__ = [
    "ClassEmbeddingBundle",
    "ClassEmbeddings",
    "ImageEmbedding",
    "ModelConfig",
    "MVFormer",
    "ViewSummary",
    "calibrated_argmax",
    "class_embeddings",
    "infer",
    "mv_summary",
    "project_image",
    "score_global",
    "score_local",
    "sv_summary",
]
