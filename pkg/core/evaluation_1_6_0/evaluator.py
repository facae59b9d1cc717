"""
ZSL and GZSL evaluation of a trained model.
"""

from typing import Literal, Optional, Sequence, Tuple

import numpy as np

from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.features import PatchFeatureRecord
from core.data_1_2_0.reports import MetricReport
from core.data_1_2_0.views import ViewCorpus
from core.evaluation_1_6_0.metrics import (
    CalibrationSweep,
    check_grid,
    default_gamma_grid,
    gzsl_scores,
    per_class_accuracies,
    sweep_gamma,
)
from core.model_1_4_0.model import ClassEmbeddings, MVFormer, calibrated_argmax
from core.tensor_1_1_0.tensor import no_grad
from core.text_1_3_0.embedder import tokenize_corpus
from core.utils.errors import SplitError
from core.utils.logging import get_logger

logger = get_logger(__name__)

CHUNK = 256


def embed_classes(model: MVFormer, corpus: ViewCorpus, table: EmbeddingTable,
                  names: Sequence[str]) -> ClassEmbeddings:
    """Class embeddings for ``names`` without recording gradients."""
    views = tokenize_corpus(corpus, table, m_max=model.config.m_max, classes=names)
    with no_grad():
        return model.class_embeddings(names, views)


def score_matrix(model: MVFormer, records: Sequence[PatchFeatureRecord], classes: ClassEmbeddings,
                 head: Optional[Literal["global", "local"]] = None) -> np.ndarray:
    """s_CLS (or s_local) for every record × class, computed in chunks."""
    head = head or model.config.inference_head
    rows = []
    with no_grad():
        for start in range(0, len(records), CHUNK):
            images = model.project_images(records[start:start + CHUNK])
            if head == "local":
                rows.append(model.score_local(images, classes).data)
            else:
                rows.append(model.score_global(images, classes).data)
    if not rows:
        return np.zeros((0, len(classes)))
    return np.concatenate(rows, axis=0)


def _require_split(records: Sequence[PatchFeatureRecord], corpus: ViewCorpus, allowed: Sequence[str],
                   purpose: str) -> None:
    splits = {c.name: c.split for c in corpus.classes}
    for i, rec in enumerate(records):
        split = splits.get(rec.class_name)
        if split not in allowed:
            raise SplitError(
                f"{purpose}: record {i} belongs to class {rec.class_name!r} "
                f"({split or 'not in corpus'}), expected one of {list(allowed)}"
            )


def eval_zsl(model: MVFormer, records: Sequence[PatchFeatureRecord], corpus: ViewCorpus,
             table: EmbeddingTable, split: str = "unseen") -> MetricReport:
    """Per-class top-1 with prediction restricted to the classes of ``split``.

    Raises:
        SplitError: If a record belongs to another split.
        CoverageError: If a class of the split has no records.
    """
    _require_split(records, corpus, [split], "zsl evaluation")
    names = [c.name for c in corpus.split(split)]
    classes = embed_classes(model, corpus, table, names)
    scores = score_matrix(model, records, classes)
    picks = calibrated_argmax(scores, np.zeros(len(names), dtype=bool))
    predictions = [names[i] for i in picks]
    accuracies = per_class_accuracies(predictions, [r.class_name for r in records], names)
    report = MetricReport(mode="zsl", zsl_t1=float(np.mean(list(accuracies.values()))), per_class=accuracies)
    logger.info(f"ZSL top-1 on {len(records)} {split} records over {len(names)} classes: {report.zsl_t1:.4f}")
    return report


def _image_key(rec: PatchFeatureRecord) -> Tuple[str, bytes]:
    return rec.class_name, np.asarray(rec.features, dtype="<f4").tobytes()


def check_disjoint(heldout: Sequence[PatchFeatureRecord], test: Sequence[PatchFeatureRecord]) -> None:
    """Raise SplitError if any test image also appears in the calibration set."""
    test_keys = {_image_key(r) for r in test}
    shared = [i for i, r in enumerate(heldout) if _image_key(r) in test_keys]
    if shared:
        raise SplitError(
            f"gzsl calibration: {len(shared)} held-out images also appear in the test set "
            f"(first is held-out record {shared[0]})"
        )


def calibrate_and_eval_gzsl(model: MVFormer, heldout: Sequence[PatchFeatureRecord],
                            test: Sequence[PatchFeatureRecord], corpus: ViewCorpus, table: EmbeddingTable,
                            grid: Optional[Sequence[float]] = None,
                            heldout_split: str = "val") -> Tuple[MetricReport, CalibrationSweep]:
    """Pick gamma on a held-out set, then report (u, s, H) on the test set.

    The held-out set holds seen-class images and images of ``heldout_split``
    classes, which stand in for the unseen side while calibrating. Its seen
    images are the slice ``fit`` held back from training, never test images.

    Raises:
        ConfigError: If the grid is empty.
        SplitError: If either set lacks one side, holds records of another split,
            or the two sets share an image.
    """
    _require_split(heldout, corpus, ["seen", heldout_split], "gzsl calibration")
    _require_split(test, corpus, ["seen", "unseen"], "gzsl test")
    for label, records, other in (("held-out", heldout, heldout_split), ("test", test, "unseen")):
        present = {corpus.split_of(r.class_name) for r in records}
        if present != {"seen", other}:
            raise SplitError(f"{label} set needs both seen and {other} images, found {sorted(present)}")
    check_disjoint(heldout, test)

    seen = [c.name for c in corpus.split("seen")]
    cal_unseen = [c.name for c in corpus.split(heldout_split)]
    test_unseen = [c.name for c in corpus.split("unseen")]
    classes = embed_classes(model, corpus, table, seen + cal_unseen + test_unseen)

    cal_names = seen + cal_unseen
    cal_index = [classes.index(n) for n in cal_names]
    cal_scores = score_matrix(model, heldout, classes)[:, cal_index]
    grid = check_grid(grid) if grid is not None else default_gamma_grid(cal_scores)
    sweep = sweep_gamma(cal_scores, [r.class_name for r in heldout], cal_names, cal_unseen, grid)
    gamma = sweep.gamma_star

    test_names = seen + test_unseen
    test_index = [classes.index(n) for n in test_names]
    test_scores = score_matrix(model, test, classes)[:, test_index]
    scores, per_class = gzsl_scores(test_scores, [r.class_name for r in test], test_names, test_unseen, gamma)
    logger.info(f"GZSL at gamma*={gamma:.4f}: u={scores.u:.4f} s={scores.s:.4f} H={scores.H:.4f}")
    return MetricReport(mode="gzsl", gzsl=scores, per_class=per_class), sweep

