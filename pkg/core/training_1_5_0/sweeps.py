"""
Ablation sweeps: retrain over one configuration axis and several seeds.
"""

from dataclasses import dataclass
from pathlib import Path
from time import time
from typing import Any, List, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.features import PatchFeatureRecord
from core.data_1_2_0.synth import SynthBundle
from core.data_1_2_0.views import ClassViews, ViewCorpus, build_corpus
from core.evaluation_1_6_0.evaluator import eval_zsl
from core.model_1_4_0.model import ModelConfig
from core.training_1_5_0.trainer import TrainConfig, fit
from core.utils.errors import ConfigError
from core.utils.helpers import atomic_write_bytes, dump_json
from core.utils.logging import get_logger

logger = get_logger(__name__)

AXES = ("lambda_local", "q", "global_pooling", "local_source", "lambda_cls")


@dataclass
class SweepData:
    """Fixed data a sweep retrains on."""

    train: Sequence[PatchFeatureRecord]
    val: Sequence[PatchFeatureRecord]
    test: Sequence[PatchFeatureRecord]
    corpus: ViewCorpus
    table: EmbeddingTable

    @classmethod
    def from_bundle(cls, bundle: SynthBundle) -> "SweepData":
        return cls(train=bundle.features["train"], val=bundle.features["val"],
                   test=bundle.features["test_unseen"], corpus=bundle.corpus, table=bundle.table)


class SweepRow(BaseModel):
    model_config = ConfigDict(extra="forbid")

    value: Any
    scores: List[float] = Field(..., description="Unseen ZSL top-1 per seed")
    mean: float
    sd: float


class SweepResult(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axis: str
    seeds: List[int]
    rows: List[SweepRow]

    def format(self) -> str:
        width = max([len(self.axis)] + [len(str(r.value)) for r in self.rows])
        lines = [f"{self.axis:<{width}}  {'mean T1':>8}  {'sd':>6}"]
        lines += [f"{str(r.value):<{width}}  {100 * r.mean:8.1f}  {100 * r.sd:6.1f}" for r in self.rows]
        return "\n".join(lines)


def truncate_views(corpus: ViewCorpus, q: int) -> ViewCorpus:
    """Keep the first q views of every class."""
    short = [c.name for c in corpus.classes if c.q < q]
    if short:
        raise ConfigError(f"q={q} exceeds the views available for {', '.join(short[:5])}")
    return build_corpus(
        ClassViews(name=c.name, split=c.split, views=c.views[:q],
                   source_tags=c.source_tags[:q] if c.source_tags else None)
        for c in corpus.classes
    )


def parse_axis_value(axis: str, raw: str) -> Any:
    if axis in ("lambda_local", "lambda_cls"):
        return float(raw)
    if axis == "q":
        return int(raw)
    return raw


def _configure(axis: str, value: Any, model_config: ModelConfig, train_config: TrainConfig, data: SweepData):
    corpus = data.corpus
    if axis in ("lambda_local", "lambda_cls"):
        train_config = train_config.model_copy(update={axis: value})
        if axis == "lambda_cls" and value == 0:
            model_config = model_config.model_copy(update={"inference_head": "local"})
        if axis == "lambda_local" and value == 0:
            model_config = model_config.model_copy(update={"inference_head": "global"})
    elif axis == "q":
        corpus = truncate_views(corpus, value)
        model_config = model_config.model_copy(update={"q": value})
    elif axis in ("global_pooling", "local_source"):
        model_config = ModelConfig.model_validate({**model_config.model_dump(), axis: value})
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {', '.join(AXES)}")
    return model_config, train_config, corpus


def run_sweep(axis: str, values: Sequence[Any], seeds: Sequence[int], model_config: ModelConfig,
              train_config: TrainConfig, data: SweepData, out_dir: Union[str, Path]) -> SweepResult:
    """Mean and standard deviation of unseen ZSL top-1 for each axis value.

    Each seed sets both the parameter initialisation and the training order.
    """
    if not values or not seeds:
        raise ConfigError("a sweep needs at least one value and one seed")
    out_dir = Path(out_dir)
    start_time = time()
    rows = []
    for value in values:
        m_cfg, t_cfg, corpus = _configure(axis, value, model_config, train_config, data)
        scores = []
        for seed in seeds:
            run_dir = out_dir / f"{axis}={value}" / f"seed={seed}"
            state = fit(data.train, data.val, corpus, data.table,
                        m_cfg.model_copy(update={"seed": seed}), t_cfg.model_copy(update={"seed": seed}), run_dir)
            report = eval_zsl(state.model, data.test, corpus, data.table)
            scores.append(report.zsl_t1)
        rows.append(SweepRow(value=value, scores=scores, mean=float(np.mean(scores)), sd=float(np.std(scores))))
        logger.info(f"Sweep {axis}={value}: mean unseen T1 {rows[-1].mean:.4f} over {len(seeds)} seeds")

    result = SweepResult(axis=axis, seeds=list(seeds), rows=rows)
    atomic_write_bytes(out_dir / "sweep.json", dump_json(result.model_dump()))
    logger.info(f"Sweep over {axis} finished in {time() - start_time:.1f}s")
    return result
