"""
Deterministic synthetic zero-shot dataset.

Each attribute word owns a fixed random unit vector in backbone space. An
image of a class is a bag of patches, each patch one of the class's
attribute vectors plus Gaussian noise; the global row is the patch mean.
The views of a class list its attribute words mixed with noise words, so
text and image are linked only through shared attributes and unseen
classes can be recognised from seen-class knowledge.
"""

from dataclasses import dataclass, field
from math import comb
from pathlib import Path
from time import time
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.data_1_2_0.embeddings import EmbeddingTable, save_embeddings
from core.data_1_2_0.features import PatchFeatureRecord, save_features
from core.data_1_2_0.views import ClassViews, ViewCorpus, build_corpus, save_views
from core.utils.config import SYNTH_FILES
from core.utils.errors import LeakageError
from core.utils.helpers import atomic_write_bytes, dump_json
from core.utils.logging import get_logger

logger = get_logger(__name__)


class SynthSpec(BaseModel):
    """Shape of a synthetic dataset."""

    model_config = ConfigDict(extra="forbid")

    n_attributes: int = Field(12, ge=1, description="Number of attribute words A")
    noise_vocab: int = Field(24, ge=0, description="Number of noise words")
    n_seen: int = Field(8, ge=1)
    n_val: int = Field(2, ge=0)
    n_unseen: int = Field(4, ge=0)
    attrs_per_class: int = Field(3, ge=1)
    attrs_per_view: Optional[int] = Field(
        None, ge=1, description="Attributes revealed by each view; all of the class's when unset"
    )
    images_per_class: int = Field(16, ge=1)
    n_patches: int = Field(16, ge=1, description="Patches per image N")
    d_backbone: int = Field(32, ge=1)
    embedding_dim: int = Field(16, ge=1)
    tokens_per_view: int = Field(8, ge=1)
    q: int = Field(3, ge=1, description="Views per class")
    sigma: float = Field(0.3, ge=0.0, description="Patch noise standard deviation")
    train_fraction: float = Field(0.8, gt=0.0, le=1.0, description="Share of seen images used for training")

    @model_validator(mode="after")
    def _check_sizes(self) -> "SynthSpec":
        if self.attrs_per_class > self.n_attributes:
            raise ValueError(f"attrs_per_class {self.attrs_per_class} exceeds n_attributes {self.n_attributes}")
        revealed = self.revealed_per_view
        if revealed > self.attrs_per_class:
            raise ValueError(f"attrs_per_view {revealed} exceeds attrs_per_class {self.attrs_per_class}")
        if self.tokens_per_view < revealed:
            raise ValueError(f"tokens_per_view {self.tokens_per_view} cannot hold {revealed} attribute words")
        if self.tokens_per_view > revealed and self.noise_vocab == 0:
            raise ValueError("views need padding but noise_vocab is 0")
        total = self.n_seen + self.n_val + self.n_unseen
        if comb(self.n_attributes, self.attrs_per_class) < total:
            raise ValueError(
                f"{total} classes need distinct attribute sets but only "
                f"{comb(self.n_attributes, self.attrs_per_class)} exist"
            )
        return self

    @property
    def revealed_per_view(self) -> int:
        return self.attrs_per_view if self.attrs_per_view is not None else self.attrs_per_class


@dataclass
class SynthBundle:
    """Everything synth_gen produces, in memory."""

    spec: SynthSpec
    seed: int
    table: EmbeddingTable
    corpus: ViewCorpus
    features: Dict[str, List[PatchFeatureRecord]]
    attributes: Dict[str, List[str]] = field(default_factory=dict)


def attribute_word(i: int) -> str:
    return f"attr{i:02d}"


def noise_word(i: int) -> str:
    return f"noise{i:02d}"


def _class_names(spec: SynthSpec) -> Dict[str, List[str]]:
    return {
        "seen": [f"seen{i:02d}" for i in range(spec.n_seen)],
        "val": [f"val{i:02d}" for i in range(spec.n_val)],
        "unseen": [f"unseen{i:02d}" for i in range(spec.n_unseen)],
    }


def _draw_sets(rng: np.random.Generator, pool: Sequence[int], k: int, count: int,
               taken: set, split: str) -> List[tuple]:
    pool = sorted(pool)
    if comb(len(pool), k) < count + sum(1 for s in taken if set(s) <= set(pool)):
        raise LeakageError(
            f"{split} classes need {count} new attribute sets but seen views only cover {len(pool)} attributes"
        )
    sets = []
    while len(sets) < count:
        candidate = tuple(sorted(int(a) for a in rng.choice(pool, size=k, replace=False)))
        if candidate not in taken:
            taken.add(candidate)
            sets.append(candidate)
    return sets


def _views_for(rng: np.random.Generator, attrs: Sequence[int], spec: SynthSpec) -> List[str]:
    revealed = spec.revealed_per_view
    views = []
    for v in range(spec.q):
        start = (v * revealed) % len(attrs)
        shown = [attrs[(start + j) % len(attrs)] for j in range(revealed)]
        words = [attribute_word(a) for a in shown]
        if spec.tokens_per_view > revealed:
            pad = rng.choice(spec.noise_vocab, size=spec.tokens_per_view - revealed, replace=True)
            words += [noise_word(int(n)) for n in pad]
        order = rng.permutation(len(words))
        views.append(" ".join(words[i] for i in order))
    return views


def _images_for(rng: np.random.Generator, name: str, attrs: Sequence[int], units: np.ndarray,
                spec: SynthSpec) -> List[PatchFeatureRecord]:
    records = []
    for _ in range(spec.images_per_class):
        picks = rng.choice(np.asarray(attrs), size=spec.n_patches, replace=True)
        noise = rng.normal(size=(spec.n_patches, spec.d_backbone))
        patches = units[picks] + spec.sigma * noise
        features = np.vstack([patches.mean(axis=0, keepdims=True), patches])
        records.append(PatchFeatureRecord(class_name=name, features=features))
    return records


def check_leakage(corpus: ViewCorpus) -> None:
    """Every attribute word in a val/unseen view must occur in some seen-class view.

    Raises:
        LeakageError: Naming the class and the words no seen view contains.
    """
    seen_words = {w for c in corpus.split("seen") for v in c.views for w in v.split()}
    for record in corpus.classes:
        if record.split == "seen":
            continue
        words = {w for v in record.views for w in v.split() if w.startswith("attr")}
        missing = sorted(words - seen_words)
        if missing:
            raise LeakageError(f"{record.split} class {record.name!r} uses attributes no seen view contains: {missing}")


def synth_gen(seed: int, spec: Optional[SynthSpec] = None) -> SynthBundle:
    """Generate a dataset as a pure function of (seed, spec)."""
    spec = spec or SynthSpec()
    start_time = time()
    rng = np.random.default_rng(seed)

    units = rng.normal(size=(spec.n_attributes, spec.d_backbone))
    units /= np.linalg.norm(units, axis=1, keepdims=True)

    names = _class_names(spec)
    taken: set = set()
    attr_sets: Dict[str, tuple] = {}
    for name, attrs in zip(names["seen"], _draw_sets(rng, range(spec.n_attributes), spec.attrs_per_class,
                                                     spec.n_seen, taken, "seen")):
        attr_sets[name] = attrs

    views: Dict[str, List[str]] = {name: _views_for(rng, attr_sets[name], spec) for name in names["seen"]}
    seen_attrs = sorted({int(w[4:]) for name in names["seen"] for v in views[name] for w in v.split()
                         if w.startswith("attr")})
    for split in ("val", "unseen"):
        sets = _draw_sets(rng, seen_attrs, spec.attrs_per_class, len(names[split]), taken, split)
        for name, attrs in zip(names[split], sets):
            attr_sets[name] = attrs
            views[name] = _views_for(rng, attrs, spec)

    corpus = build_corpus(
        ClassViews(name=name, split=split, views=views[name], source_tags=["synth"] * spec.q)
        for split in ("seen", "val", "unseen") for name in names[split]
    )
    check_leakage(corpus)

    vocabulary = [attribute_word(i) for i in range(spec.n_attributes)] + [noise_word(i) for i in range(spec.noise_vocab)]
    vectors = rng.normal(size=(len(vocabulary), spec.embedding_dim)) / np.sqrt(spec.embedding_dim)
    table = EmbeddingTable(dim=spec.embedding_dim, entries=dict(zip(vocabulary, vectors)))

    features: Dict[str, List[PatchFeatureRecord]] = {"train": [], "val": [], "test_seen": [], "test_unseen": []}
    n_train = max(1, int(round(spec.train_fraction * spec.images_per_class)))
    for name in names["seen"]:
        images = _images_for(rng, name, attr_sets[name], units, spec)
        order = rng.permutation(len(images))
        features["train"] += [images[i] for i in order[:n_train]]
        features["test_seen"] += [images[i] for i in order[n_train:]]
    for name in names["val"]:
        features["val"] += _images_for(rng, name, attr_sets[name], units, spec)
    for name in names["unseen"]:
        features["test_unseen"] += _images_for(rng, name, attr_sets[name], units, spec)

    logger.info(
        f"Generated synthetic dataset (seed={seed}) with {len(corpus.classes)} classes and "
        f"{sum(len(v) for v in features.values())} images in {time() - start_time:.2f}s"
    )
    return SynthBundle(
        spec=spec, seed=seed, table=table, corpus=corpus, features=features,
        attributes={name: [attribute_word(a) for a in attrs] for name, attrs in attr_sets.items()},
    )


def write_synth_bundle(bundle: SynthBundle, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write every file of a bundle into ``out_dir`` and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {key: out_dir / name for key, name in SYNTH_FILES.items()}
    save_embeddings(bundle.table, paths["EMBEDDINGS"])
    save_views(bundle.corpus, paths["VIEWS"])
    save_features(bundle.features["train"], paths["TRAIN"])
    save_features(bundle.features["val"], paths["VAL"])
    save_features(bundle.features["test_seen"], paths["TEST_SEEN"])
    save_features(bundle.features["test_unseen"], paths["TEST_UNSEEN"])
    atomic_write_bytes(paths["SPEC"], dump_json({"seed": bundle.seed, "spec": bundle.spec.model_dump()}))
    logger.info(f"Wrote synthetic bundle to {out_dir}")
    return paths
