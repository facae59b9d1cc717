"""
Joint optimisation of the global and local classification losses.
"""

import shutil
from dataclasses import dataclass, field
from math import inf
from pathlib import Path
from time import time
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import orjson
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.data_1_2_0.checkpoint import load_checkpoint, save_checkpoint
from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.features import PatchFeatureRecord, save_features
from core.data_1_2_0.views import ViewCorpus
from core.evaluation_1_6_0.evaluator import embed_classes, eval_zsl, score_matrix
from core.evaluation_1_6_0.metrics import default_gamma_grid, sweep_gamma
from core.model_1_4_0.model import ModelConfig, MVFormer
from core.tensor_1_1_0 import ops
from core.tensor_1_1_0.optim import Adam
from core.tensor_1_1_0.tensor import Tape, Tensor, backward, no_grad
from core.text_1_3_0.embedder import TokenizedView, tokenize_corpus
from core.utils.config import config
from core.utils.errors import ConfigError, ShapeError, SplitError
from core.utils.logging import get_logger

logger = get_logger(__name__)


class TrainConfig(BaseModel):
    """Optimisation and model-selection settings."""

    model_config = ConfigDict(extra="forbid")

    lr: float = Field(1e-3, gt=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    epochs: int = Field(200, ge=1)
    batch_size: int = Field(32, ge=1)
    lambda_local: float = Field(1.0, ge=0.0, description="Weight of the local-search loss")
    lambda_cls: float = Field(1.0, ge=0.0, description="Weight of the global loss")
    lambda_grid: List[float] = Field(default_factory=lambda: [0.1, 0.5, 1.0])
    seed: int = 0
    patience: int = Field(20, ge=0, description="Epochs without validation improvement before stopping")
    min_epochs: int = Field(30, ge=0, description="Epochs trained before checkpoint selection and early stopping start")
    selection_metric: Literal["zsl_t1", "gzsl_h"] = "gzsl_h"
    heldout_fraction: float = Field(0.2, gt=0.0, lt=1.0,
                                    description="Seen training images held back for selection and GZSL calibration")
    checkpoint_dtype: Literal["f8", "f4"] = "f8"

    @model_validator(mode="after")
    def _some_loss(self) -> "TrainConfig":
        if self.lambda_local == 0 and self.lambda_cls == 0:
            raise ValueError("lambda_local and lambda_cls cannot both be 0")
        if any(w < 0 for w in self.lambda_grid):
            raise ValueError("lambda_grid weights must be non-negative")
        return self


@dataclass
class EpochRecord:
    epoch: int
    loss_cls: float
    loss_local: float
    loss_total: float
    val_metric: float


@dataclass
class TrainState:
    """Progress of one fit."""

    epoch: int = 0
    best_score: float = -inf
    best_epoch: int = 0
    best_checkpoint: Optional[Path] = None
    heldout_path: Optional[Path] = None
    history: List[EpochRecord] = field(default_factory=list)
    model: Optional[MVFormer] = field(default=None, repr=False)

    def update(self, score: float) -> bool:
        """Record a validation score; True when it is at least the best so far.

        Ties go to the later epoch.
        """
        if score >= self.best_score:
            self.best_score = score
            self.best_epoch = self.epoch
            return True
        return False

    @property
    def losses(self) -> List[float]:
        return [r.loss_total for r in self.history]


def resolve_model_config(model_config: ModelConfig, table: EmbeddingTable) -> ModelConfig:
    """Fill embedding_dim from the table, or check it agrees."""
    if model_config.embedding_dim is None:
        return model_config.model_copy(update={"embedding_dim": table.dim})
    if model_config.embedding_dim != table.dim:
        raise ShapeError(f"model expects {model_config.embedding_dim}-d word vectors, table has {table.dim}")
    return model_config


def check_heads(model_config: ModelConfig, train_config: TrainConfig) -> None:
    if model_config.inference_head == "global" and train_config.lambda_cls == 0:
        raise ConfigError("inference_head='global' needs lambda_cls > 0")
    if model_config.inference_head == "local" and train_config.lambda_local == 0:
        raise ConfigError("inference_head='local' needs lambda_local > 0")


def _weighted(loss: Tensor, weight: float) -> Tensor:
    return loss if weight == 1.0 else loss * weight


def step(batch: Sequence[PatchFeatureRecord], model: MVFormer, opt: Adam, seen_views: Mapping[str, Sequence[TokenizedView]],
         lambda_local: float = 1.0, lambda_cls: float = 1.0) -> Dict[str, float]:
    """One optimisation step over a batch against every seen class.

    A loss whose weight is 0 is still computed for reporting, without gradient.

    Raises:
        SplitError: If a label is not a seen class.
    """
    names = list(seen_views)
    index = {name: i for i, name in enumerate(names)}
    try:
        targets = [index[rec.class_name] for rec in batch]
    except KeyError as exc:
        raise SplitError(f"training label {exc.args[0]!r} is not a seen class") from exc

    with Tape() as tape:
        images = model.project_images(batch)
        classes = model.class_embeddings(names, seen_views)
        terms = []
        if lambda_cls > 0:
            loss_cls = ops.cross_entropy(model.score_global(images, classes), targets)
            terms.append(_weighted(loss_cls, lambda_cls))
        else:
            with no_grad():
                loss_cls = ops.cross_entropy(model.score_global(images, classes), targets)
        if lambda_local > 0:
            loss_local = ops.cross_entropy(model.score_local(images, classes), targets)
            terms.append(_weighted(loss_local, lambda_local))
        else:
            with no_grad():
                loss_local = ops.cross_entropy(model.score_local(images, classes), targets)
        total = terms[0] if len(terms) == 1 else terms[0] + terms[1]
    backward(total, tape)
    opt.step()
    return {"loss_cls": loss_cls.item(), "loss_local": loss_local.item(), "loss_total": total.item()}


def hold_back(records: Sequence[PatchFeatureRecord], fraction: float,
              rng: np.random.Generator) -> Tuple[List[PatchFeatureRecord], List[PatchFeatureRecord]]:
    """Stratified split into (kept, held back); every class keeps at least one image."""
    by_class: Dict[str, List[int]] = {}
    for i, rec in enumerate(records):
        by_class.setdefault(rec.class_name, []).append(i)
    held = set()
    for members in by_class.values():
        n = min(len(members) - 1, max(1, int(round(fraction * len(members)))))
        if n > 0:
            held.update(int(i) for i in rng.choice(members, size=n, replace=False))
    kept = [rec for i, rec in enumerate(records) if i not in held]
    back = [rec for i, rec in enumerate(records) if i in held]
    return kept, back


def _gzsl_selection_score(model: MVFormer, heldout: Sequence[PatchFeatureRecord], corpus: ViewCorpus,
                          table: EmbeddingTable) -> float:
    """Best H over the default gamma grid with val classes as the unseen side."""
    seen = [c.name for c in corpus.split("seen")]
    val = [c.name for c in corpus.split("val")]
    classes = embed_classes(model, corpus, table, seen + val)
    scores = score_matrix(model, heldout, classes)
    sweep = sweep_gamma(scores, [r.class_name for r in heldout], seen + val, val, default_gamma_grid(scores))
    return max(sweep.H)


def _check_records(records: Sequence[PatchFeatureRecord], corpus: ViewCorpus, split: str, purpose: str) -> None:
    if not records:
        raise SplitError(f"{purpose} split is empty")
    splits = {c.name: c.split for c in corpus.classes}
    for i, rec in enumerate(records):
        if splits.get(rec.class_name) != split:
            raise SplitError(f"{purpose} record {i} has class {rec.class_name!r}, which is not a {split} class")


def fit(train: Sequence[PatchFeatureRecord], val: Sequence[PatchFeatureRecord], corpus: ViewCorpus,
        table: EmbeddingTable, model_config: ModelConfig, train_config: TrainConfig,
        out_dir: Union[str, Path]) -> TrainState:
    """Train on seen classes, select on val classes and keep the best checkpoint.

    A stratified ``heldout_fraction`` of the seen training images is held
    back, never trained on, and written to ``heldout_seen.features``; with
    ``gzsl_h`` selection it joins the val images as the selection set, and
    ``eval --mode gzsl`` calibrates gamma on the same pair. Selection and
    early stopping start at ``min_epochs`` (capped at ``epochs``).

    Writes ``best.ckpt`` and a JSON-lines training log into ``out_dir``. The
    returned state's model holds the best weights.

    Raises:
        SplitError: If train or val is empty or holds records of another split, or
            gzsl_h selection finds nothing to hold back.
        ConfigError: If the inference head has no training signal.
    """
    _check_records(train, corpus, "seen", "train")
    _check_records(val, corpus, "val", "validation")
    model_config = resolve_model_config(model_config, table)
    check_heads(model_config, train_config)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = out_dir / config["files"]["checkpoint"]
    log_path = out_dir / config["files"]["train_log"]
    log_path.write_bytes(b"")

    rng = np.random.default_rng(train_config.seed)
    train, held_seen = hold_back(train, train_config.heldout_fraction, rng)
    if not held_seen and train_config.selection_metric == "gzsl_h":
        raise SplitError("gzsl_h selection needs seen classes with at least two training images")
    heldout_path = out_dir / config["files"]["heldout"]
    save_features(held_seen, heldout_path)
    heldout = held_seen + list(val)
    first_eligible = max(1, min(train_config.min_epochs, train_config.epochs))

    model = MVFormer(model_config)
    params = model.active_parameters(use_global=train_config.lambda_cls > 0, use_local=train_config.lambda_local > 0)
    opt = Adam(params, lr=train_config.lr, beta1=train_config.beta1, beta2=train_config.beta2, eps=train_config.adam_eps)
    seen_names = [c.name for c in corpus.split("seen")]
    seen_views = tokenize_corpus(corpus, table, m_max=model_config.m_max, classes=seen_names)
    echo = {"model": model_config.model_dump(), "train": train_config.model_dump()}
    logger.info(
        f"Training {len(params)} parameter tensors on {len(train)} images of {len(seen_names)} seen classes, "
        f"{len(held_seen)} held back"
    )

    state = TrainState(model=model, heldout_path=heldout_path)
    since_best = 0
    for epoch in range(1, train_config.epochs + 1):
        start_time = time()
        state.epoch = epoch
        order = rng.permutation(len(train))
        sums = {"loss_cls": 0.0, "loss_local": 0.0, "loss_total": 0.0}
        for start in range(0, len(order), train_config.batch_size):
            batch = [train[i] for i in order[start:start + train_config.batch_size]]
            losses = step(batch, model, opt, seen_views, train_config.lambda_local, train_config.lambda_cls)
            for key in sums:
                sums[key] += losses[key] * len(batch)
        means = {key: value / len(train) for key, value in sums.items()}

        if train_config.selection_metric == "gzsl_h":
            metric = _gzsl_selection_score(model, heldout, corpus, table)
        else:
            metric = eval_zsl(model, val, corpus, table, split="val").zsl_t1
        record = EpochRecord(epoch=epoch, val_metric=metric, **means)
        state.history.append(record)
        with log_path.open("ab") as handle:
            handle.write(orjson.dumps(record.__dict__) + b"\n")

        if epoch >= first_eligible:
            previous = state.best_score
            if state.update(metric):
                save_checkpoint(model.named_parameters(), echo, ckpt_path, dtype=train_config.checkpoint_dtype)
                state.best_checkpoint = ckpt_path
            since_best = 0 if metric > previous else since_best + 1
        logger.info(
            f"Epoch {epoch}: loss_cls={means['loss_cls']:.4f} loss_local={means['loss_local']:.4f} "
            f"{train_config.selection_metric}={metric:.4f} ({time() - start_time:.2f}s)"
        )
        if epoch >= first_eligible and since_best >= train_config.patience:
            break

    params_by_name, _ = load_checkpoint(ckpt_path)
    model.load_state_dict(params_by_name)
    logger.info(f"Best {train_config.selection_metric}={state.best_score:.4f} at epoch {state.best_epoch}")
    return state


def fit_grid(train: Sequence[PatchFeatureRecord], val: Sequence[PatchFeatureRecord], corpus: ViewCorpus,
             table: EmbeddingTable, model_config: ModelConfig, train_config: TrainConfig,
             out_dir: Union[str, Path]) -> Tuple[float, TrainState, Dict[float, TrainState]]:
    """Fit once per lambda_local in the grid and keep the best validation run.

    The winning checkpoint and its held-back slice are copied to ``out_dir``.
    """
    if not train_config.lambda_grid:
        raise ConfigError("lambda_grid is empty")
    out_dir = Path(out_dir)
    runs: Dict[float, TrainState] = {}
    for weight in train_config.lambda_grid:
        run_config = train_config.model_copy(update={"lambda_local": weight})
        runs[weight] = fit(train, val, corpus, table, model_config, run_config, out_dir / f"lambda_{weight:g}")
    best = max(runs, key=lambda w: (runs[w].best_score, -train_config.lambda_grid.index(w)))
    shutil.copyfile(runs[best].best_checkpoint, out_dir / config["files"]["checkpoint"])
    shutil.copyfile(runs[best].heldout_path, out_dir / config["files"]["heldout"])
    logger.info(f"Selected lambda_local={best:g} with validation score {runs[best].best_score:.4f}")
    return best, runs[best], runs


def load_model(path: Union[str, Path], overrides: Optional[Mapping] = None) -> Tuple[MVFormer, Dict]:
    """Rebuild a model from a checkpoint's config echo and load its weights.

    Raises:
        ShapeError: If the stored tensors do not fit the configured model.
    """
    params, echo = load_checkpoint(path)
    model_config = ModelConfig.model_validate({**echo.get("model", {}), **(overrides or {})})
    model = MVFormer(model_config)
    model.load_state_dict(params)
    return model, echo
