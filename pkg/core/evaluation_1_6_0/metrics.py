"""
Accuracy metrics and the calibrated-stacking sweep.
"""

from typing import Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from core.data_1_2_0.reports import GzslScores, MetricReport, harmonic_mean
from core.model_1_4_0.model import calibrated_argmax
from core.utils.errors import ConfigError, CoverageError, SplitError

GRID_POINTS = 101


def per_class_accuracies(predictions: Sequence[str], labels: Sequence[str],
                         class_set: Iterable[str]) -> Dict[str, float]:
    """Within-class accuracy for every class in ``class_set``.

    Raises:
        SplitError: If a label is outside ``class_set``.
        CoverageError: If a class has no records.
    """
    classes = list(dict.fromkeys(class_set))
    if len(predictions) != len(labels):
        raise ValueError(f"{len(predictions)} predictions for {len(labels)} labels")
    known = set(classes)
    totals = {c: 0 for c in classes}
    correct = {c: 0 for c in classes}
    for pred, label in zip(predictions, labels):
        if label not in known:
            raise SplitError(f"label {label!r} is not in the evaluated class set")
        totals[label] += 1
        correct[label] += int(pred == label)
    empty = [c for c in classes if totals[c] == 0]
    if empty:
        raise CoverageError(f"no test records for class(es): {', '.join(empty[:5])}")
    return {c: correct[c] / totals[c] for c in classes}


def per_class_top1(predictions: Sequence[str], labels: Sequence[str], class_set: Iterable[str]) -> float:
    """Mean over classes of within-class accuracy."""
    accuracies = per_class_accuracies(predictions, labels, class_set)
    if not accuracies:
        raise CoverageError("class set is empty")
    return float(np.mean(list(accuracies.values())))


class CalibrationSweep(BaseModel):
    """(u, s, H) of a fixed score matrix for every gamma of a grid."""

    model_config = ConfigDict(extra="forbid")

    gammas: List[float] = Field(..., min_length=1)
    u: List[float]
    s: List[float]
    H: List[float]

    @model_validator(mode="after")
    def _grid_is_valid(self) -> "CalibrationSweep":
        if not (len(self.gammas) == len(self.u) == len(self.s) == len(self.H)):
            raise ValueError("sweep columns differ in length")
        if any(b <= a for a, b in zip(self.gammas, self.gammas[1:])):
            raise ValueError("gamma grid must be strictly increasing")
        if 0.0 not in self.gammas:
            raise ValueError("gamma grid must include 0")
        return self

    @property
    def best_index(self) -> int:
        """First gamma with the highest H."""
        return int(np.argmax(self.H))

    @property
    def gamma_star(self) -> float:
        return self.gammas[self.best_index]


def default_gamma_grid(scores: np.ndarray, points: int = GRID_POINTS) -> List[float]:
    """Evenly spaced gammas from 0 to (max − min) of a score matrix."""
    span = float(np.max(scores) - np.min(scores)) if np.size(scores) else 0.0
    if span <= 0.0:
        return [0.0]
    return [float(g) for g in np.linspace(0.0, span, points)]


def check_grid(grid: Sequence[float]) -> List[float]:
    grid = [float(g) for g in grid]
    if not grid:
        raise ConfigError("gamma grid is empty")
    return sorted(set(grid) | {0.0})


def gzsl_scores(scores: np.ndarray, labels: Sequence[str], names: Sequence[str], unseen: Iterable[str],
                gamma: float) -> tuple:
    """Seen and unseen per-class top-1 over the union of candidates at one gamma.

    Returns:
        (GzslScores, per-class accuracies)
    """
    unseen = set(unseen)
    mask = np.array([n in unseen for n in names])
    picks = calibrated_argmax(scores, mask, gamma)
    predictions = [names[i] for i in picks]
    seen_classes = [n for n in names if n not in unseen]
    unseen_classes = [n for n in names if n in unseen]
    seen_rows = [i for i, label in enumerate(labels) if label not in unseen]
    unseen_rows = [i for i, label in enumerate(labels) if label in unseen]
    acc_s = per_class_accuracies([predictions[i] for i in seen_rows], [labels[i] for i in seen_rows], seen_classes)
    acc_u = per_class_accuracies([predictions[i] for i in unseen_rows], [labels[i] for i in unseen_rows], unseen_classes)
    u = float(np.mean(list(acc_u.values())))
    s = float(np.mean(list(acc_s.values())))
    return GzslScores.from_accuracies(u, s, gamma), {**acc_s, **acc_u}


def sweep_gamma(scores: np.ndarray, labels: Sequence[str], names: Sequence[str], unseen: Iterable[str],
                grid: Sequence[float]) -> CalibrationSweep:
    unseen = set(unseen)
    rows = [gzsl_scores(scores, labels, names, unseen, g)[0] for g in grid]
    return CalibrationSweep(gammas=list(grid), u=[r.u for r in rows], s=[r.s for r in rows], H=[r.H for r in rows])


def format_table(reports: Mapping[str, MetricReport]) -> str:
    """Fixed-width T1 / u / s / H table, one row per report."""
    width = max([len("run")] + [len(name) for name in reports])
    lines = [f"{'run':<{width}}  {'T1':>6}  {'u':>6}  {'s':>6}  {'H':>6}"]

    def cell(value: Optional[float]) -> str:
        return f"{100.0 * value:6.1f}" if value is not None else f"{'-':>6}"

    for name, report in reports.items():
        g = report.gzsl
        lines.append(
            f"{name:<{width}}  {cell(report.zsl_t1)}  {cell(g.u if g else None)}  "
            f"{cell(g.s if g else None)}  {cell(g.H if g else None)}"
        )
    return "\n".join(lines)


__all__ = [
    "CalibrationSweep",
    "default_gamma_grid",
    "format_table",
    "gzsl_scores",
    "harmonic_mean",
    "per_class_accuracies",
    "per_class_top1",
    "sweep_gamma",
]
