"""
The multi-view zero-shot classifier.

Images enter as frozen-backbone features and are projected into the joint
space. Each class is described by q text views; every view is summarised
into T tokens whose first slot is the view-level CLS token. The class
embedding is the mean of the per-view CLS tokens (global score) plus a
multi-view summary of all local tokens (local score).
"""

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.data_1_2_0.features import PatchFeatureRecord
from core.model_1_4_0.local_search import LocalSearch
from core.model_1_4_0.summaries import MVSummary, SVSummary
from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.nn import Module, ProjectionMLP
from core.tensor_1_1_0.tensor import Tensor
from core.text_1_3_0.embedder import EncodedView, TextProjector, TokenizedView
from core.utils.errors import ModelError, ShapeError
from core.utils.logging import get_logger

logger = get_logger(__name__)


class ModelConfig(BaseModel):
    """Architecture hyper-parameters."""

    model_config = ConfigDict(extra="forbid")

    r: int = Field(32, ge=1, description="Joint embedding dimension")
    T: int = Field(8, ge=2, description="Summary tokens per view: one CLS plus T-1 local tokens")
    text_blocks: int = Field(2, ge=1, description="Encoder blocks in the single-view summariser")
    heads: int = Field(4, ge=1, description="Heads of the summariser self-attention")
    m_max: int = Field(512, ge=1, description="Maximum tokens kept per view")
    q: Optional[int] = Field(None, ge=1, description="Expected views per class; taken from the corpus when unset")
    d_backbone: int = Field(32, ge=1, description="Width of the frozen image features")
    embedding_dim: Optional[int] = Field(None, ge=1, description="Word-vector width; taken from the table when unset")
    layer_norm_eps: float = Field(1e-5, ge=0.0)
    seed: int = Field(0, description="Parameter initialisation seed")
    allow_ragged_views: bool = False
    global_pooling: Literal["summary", "concat"] = "summary"
    local_source: Literal["mv_summary", "concat"] = "mv_summary"
    inference_head: Literal["global", "local"] = "global"

    @model_validator(mode="after")
    def _heads_divide_r(self) -> "ModelConfig":
        if self.r % self.heads:
            raise ValueError(f"r={self.r} is not divisible by heads={self.heads}")
        return self


@dataclass
class ImageEmbedding:
    """Projected image: i_cls (r) and i_patch (N×r); batched as B×r and B×N×r."""

    i_cls: Tensor
    i_patch: Tensor


@dataclass
class ViewSummary:
    """Summary of one view: cls (r) and local ((T−1)×r)."""

    cls: Tensor
    local: Tensor


@dataclass
class ClassEmbeddingBundle:
    """Class-level text embedding: v_cls (r) and v_mv (T×r)."""

    v_cls: Tensor
    v_mv: Tensor


@dataclass
class ClassEmbeddings:
    """Bundles of C classes stacked: v_cls (C×r), v_mv (C×T'×r)."""

    names: List[str]
    v_cls: Tensor
    v_mv: Tensor

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def bundle(self, name: str) -> ClassEmbeddingBundle:
        i = self.index(name)
        return ClassEmbeddingBundle(v_cls=self.v_cls[i], v_mv=self.v_mv[i])

    @classmethod
    def from_bundles(cls, names: Sequence[str], bundles: Sequence[ClassEmbeddingBundle]) -> "ClassEmbeddings":
        return cls(names=list(names), v_cls=ops.stack([b.v_cls for b in bundles]),
                   v_mv=ops.stack([b.v_mv for b in bundles]))


ImageInput = Union[PatchFeatureRecord, Sequence[PatchFeatureRecord], np.ndarray]


class MVFormer(Module):
    """Image projector, text tower and both scoring heads."""

    def __init__(self, config: ModelConfig):
        if config.embedding_dim is None:
            raise ModelError("ModelConfig.embedding_dim must be resolved before building the model")
        self.config = config
        rng = np.random.default_rng(config.seed)
        eps = config.layer_norm_eps
        self.image_proj = ProjectionMLP(config.d_backbone, config.r, rng, eps)
        self.text_proj = TextProjector(config.embedding_dim, config.r, rng, eps)
        self.sv = SVSummary(config.r, config.T, config.text_blocks, config.heads, config.m_max, rng, eps)
        self.mv = MVSummary(config.r, config.T, config.heads, rng, eps)
        self.local = LocalSearch(config.r, rng)
        self.tag_parameters()
        self.token_counter: Counter = Counter()

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    def active_parameters(self, use_global: bool = True, use_local: bool = True) -> List[Tensor]:
        """Parameters that can receive gradient from the selected losses."""
        prefixes = ["image_proj.", "text_proj.", "sv."]
        if use_local:
            prefixes.append("local.")
            if self.config.local_source == "mv_summary":
                prefixes.append("mv.")
        if not use_global and not use_local:
            return []
        return [p for name, p in self.named_parameters() if name.startswith(tuple(prefixes))]

    # ------------------------------------------------------------------
    # Image tower
    # ------------------------------------------------------------------

    def project_images(self, images: ImageInput) -> ImageEmbedding:
        """Project B×(N+1)×d features; row 0 of each image is the backbone CLS row."""
        if isinstance(images, PatchFeatureRecord):
            images = [images]
        if not isinstance(images, np.ndarray):
            if not len(images):
                raise ShapeError("no images to project")
            shapes = {rec.features.shape for rec in images}
            if len(shapes) != 1:
                raise ShapeError(f"images disagree on feature shape: {sorted(shapes)}")
            images = np.stack([rec.features for rec in images])
        if images.ndim != 3 or images.shape[-1] != self.config.d_backbone or images.shape[1] < 2:
            raise ShapeError(f"image features of shape {images.shape} do not match B×(N+1)×{self.config.d_backbone}")
        x = self.image_proj(Tensor(images))
        return ImageEmbedding(i_cls=x[:, 0, :], i_patch=x[:, 1:, :])

    def project_image(self, rec: PatchFeatureRecord) -> ImageEmbedding:
        batch = self.project_images([rec])
        return ImageEmbedding(i_cls=batch.i_cls[0], i_patch=batch.i_patch[0])

    # ------------------------------------------------------------------
    # Text tower
    # ------------------------------------------------------------------

    def sv_summary(self, view: EncodedView) -> ViewSummary:
        out = self.sv(view.embedded)
        return ViewSummary(cls=out[0], local=out[1:])

    def mv_summary(self, summaries: Sequence[ViewSummary]) -> Tensor:
        if not summaries:
            raise ShapeError("multi-view summary needs at least one view")
        widths = {s.local.shape for s in summaries}
        if len(widths) != 1:
            raise ShapeError(f"views disagree on local token shape: {sorted(widths)}")
        return self.mv(ops.concat([s.local for s in summaries], axis=0))

    def _summarise_views(self, views: Sequence[TokenizedView]) -> Tensor:
        """Summaries of many views, grouped by length and stacked: (len(views))×T×r."""
        groups: Dict[int, List[int]] = {}
        for i, view in enumerate(views):
            groups.setdefault(view.length, []).append(i)
        outputs, order = [], []
        for length, members in groups.items():
            vectors = np.stack([views[i].vectors for i in members])
            outputs.append(self.sv(self.text_proj(Tensor(vectors))))
            order.extend(members)
        stacked = outputs[0] if len(outputs) == 1 else ops.concat(outputs, axis=0)
        if order == sorted(order):
            return stacked
        return ops.take(stacked, np.argsort(order), axis=0)

    def _concat_cls(self, views: Sequence[TokenizedView]) -> Tensor:
        vectors = np.concatenate([v.vectors for v in views], axis=0)[: self.config.m_max]
        return self.sv(self.text_proj(Tensor(vectors)))[0]

    def class_embeddings(self, names: Sequence[str], views: Mapping[str, Sequence[TokenizedView]]) -> ClassEmbeddings:
        """Embed the classes ``names`` from their tokenised views."""
        names = list(names)
        if not names:
            raise ModelError("no classes to embed")
        counts = [len(views[name]) for name in names]
        if min(counts) < 1:
            raise ShapeError("every class needs at least one view")
        uniform = len(set(counts)) == 1
        if not uniform and self.config.local_source == "concat":
            raise ShapeError("local_source='concat' needs the same number of views for every class")
        flat = [v for name in names for v in views[name]]
        summaries = self._summarise_views(flat)
        t, r = self.config.T, self.config.r

        if uniform:
            q = counts[0]
            per_view = ops.reshape(summaries, (len(names), q, t, r))
            v_cls = ops.mean(per_view[:, :, 0, :], axis=1)
            v_mv = self._local_summary(ops.reshape(per_view[:, :, 1:, :], (len(names), q * (t - 1), r)))
        else:
            bounds = np.concatenate([[0], np.cumsum(counts)])
            cls_rows, mv_rows = [], []
            for i in range(len(names)):
                block = summaries[int(bounds[i]):int(bounds[i + 1])]
                cls_rows.append(ops.mean(block[:, 0, :], axis=0))
                mv_rows.append(self._local_summary(ops.reshape(block[:, 1:, :], (counts[i] * (t - 1), r))))
            v_cls = ops.stack(cls_rows)
            v_mv = ops.stack(mv_rows)

        if self.config.global_pooling == "concat":
            v_cls = ops.stack([self._concat_cls(views[name]) for name in names])
        return ClassEmbeddings(names=names, v_cls=v_cls, v_mv=v_mv)

    def _local_summary(self, local: Tensor) -> Tensor:
        if self.config.local_source == "concat":
            return local
        return self.mv(local)

    def class_bundle(self, views: Sequence[TokenizedView], name: str = "") -> ClassEmbeddingBundle:
        return self.class_embeddings([name], {name: views}).bundle(name)

    # ------------------------------------------------------------------
    # Scores
    # ------------------------------------------------------------------

    def score_global(self, images: ImageEmbedding, classes: ClassEmbeddings) -> Tensor:
        """s_CLS for every (image, class): B×C."""
        return ops.matmul(images.i_cls, ops.transpose(classes.v_cls))

    def score_local(self, images: ImageEmbedding, classes: ClassEmbeddings) -> Tensor:
        """s_local for every (image, class): B×C."""
        for name in classes.names:
            self.token_counter[name] += classes.v_mv.shape[-2]
        return self.local(images.i_patch, classes.v_mv)

    def inference_scores(self, images: ImageEmbedding, classes: ClassEmbeddings) -> Tensor:
        if self.config.inference_head == "local":
            return self.score_local(images, classes)
        return self.score_global(images, classes)


# ----------------------------------------------------------------------
# Single-item operations
# ----------------------------------------------------------------------

def project_image(rec: PatchFeatureRecord, model: MVFormer) -> ImageEmbedding:
    return model.project_image(rec)


def sv_summary(view: EncodedView, model: MVFormer) -> ViewSummary:
    return model.sv_summary(view)


def mv_summary(summaries: Sequence[ViewSummary], model: MVFormer) -> Tensor:
    return model.mv_summary(summaries)


def class_embeddings(views: Sequence[TokenizedView], model: MVFormer) -> ClassEmbeddingBundle:
    return model.class_bundle(views)


def score_global(img: ImageEmbedding, cls: ClassEmbeddingBundle) -> Tensor:
    """s_CLS = i_cls · v_cls."""
    return ops.dot(img.i_cls, cls.v_cls)


def score_local(img: ImageEmbedding, cls: ClassEmbeddingBundle, model: MVFormer) -> Tensor:
    """s_local of one image against one class."""
    patches = ops.reshape(img.i_patch, (1,) + img.i_patch.shape)
    summary = ops.reshape(cls.v_mv, (1,) + cls.v_mv.shape)
    return model.local(patches, summary)[0, 0]


def calibrated_argmax(scores: np.ndarray, unseen_mask: np.ndarray, gamma: float = 0.0) -> np.ndarray:
    """Row-wise argmax after adding ``gamma`` to unseen columns; ties go to the lowest index."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if scores.shape[1] == 0:
        raise ModelError("candidate class set is empty")
    return np.argmax(scores + gamma * np.asarray(unseen_mask, dtype=np.float64), axis=1)


def infer(img: ImageEmbedding, classes: ClassEmbeddings, mode: Literal["zsl", "gzsl"] = "zsl",
          gamma: float = 0.0, unseen: Optional[Sequence[str]] = None,
          model: Optional[MVFormer] = None) -> Union[str, List[str]]:
    """Predict class names by the highest compatibility score.

    Args:
        img: Single or batched image embedding.
        classes: Candidate classes in corpus order. For ZSL pass unseen classes only.
        mode: "zsl" ignores gamma; "gzsl" adds gamma to every class in ``unseen``.
        unseen: Names of unseen candidates (gzsl).
        model: Needed only when inference uses the local head.

    Returns:
        One name for a single image, a list for a batch.
    """
    if len(classes) == 0:
        raise ModelError("candidate class set is empty")
    single = img.i_cls.ndim == 1
    if single:
        img = ImageEmbedding(i_cls=ops.reshape(img.i_cls, (1, -1)),
                             i_patch=ops.reshape(img.i_patch, (1,) + img.i_patch.shape))
    if model is not None:
        scores = model.inference_scores(img, classes).data
    else:
        scores = ops.matmul(img.i_cls, ops.transpose(classes.v_cls)).data
    unseen_set = set(unseen or ())
    mask = np.array([name in unseen_set for name in classes.names])
    picks = calibrated_argmax(scores, mask, gamma if mode == "gzsl" else 0.0)
    names = [classes.names[i] for i in picks]
    return names[0] if single else names
