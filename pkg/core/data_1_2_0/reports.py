"""
Metric reports.

File layout (JSON)::

    {"mode": "zsl" | "gzsl",
     "zsl_t1": 0.71,
     "gzsl": {"u": 0.52, "s": 0.80, "H": 0.63, "gamma": 0.35},
     "per_class": {"zebra": 0.9, ...}}
"""

from pathlib import Path
from typing import Dict, Literal, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from core.utils.errors import FormatError, MissingFileError
from core.utils.helpers import atomic_write_bytes, dump_json
from core.utils.logging import get_logger

logger = get_logger(__name__)


def harmonic_mean(u: float, s: float) -> float:
    """2us/(u+s), or 0 when both are zero."""
    return 2.0 * u * s / (u + s) if u + s > 0 else 0.0


class GzslScores(BaseModel):
    """Unseen accuracy, seen accuracy and their harmonic mean at one gamma."""

    model_config = ConfigDict(extra="forbid")

    u: float = Field(..., ge=0.0, le=1.0)
    s: float = Field(..., ge=0.0, le=1.0)
    H: float = Field(..., ge=0.0, le=1.0)
    gamma: float = Field(0.0, description="Bias added to unseen-class scores")

    @classmethod
    def from_accuracies(cls, u: float, s: float, gamma: float = 0.0) -> "GzslScores":
        return cls(u=u, s=s, H=harmonic_mean(u, s), gamma=gamma)


class MetricReport(BaseModel):
    """Result of one ZSL or GZSL evaluation."""

    model_config = ConfigDict(extra="forbid")

    mode: Literal["zsl", "gzsl"]
    zsl_t1: Optional[float] = Field(None, ge=0.0, le=1.0)
    gzsl: Optional[GzslScores] = None
    per_class: Dict[str, float] = Field(default_factory=dict, description="Per-class top-1 accuracy")

    @model_validator(mode="after")
    def _mode_fields_present(self) -> "MetricReport":
        if self.mode == "zsl" and self.zsl_t1 is None:
            raise ValueError("zsl report needs zsl_t1")
        if self.mode == "gzsl" and self.gzsl is None:
            raise ValueError("gzsl report needs gzsl scores")
        for name, acc in self.per_class.items():
            if not 0.0 <= acc <= 1.0:
                raise ValueError(f"accuracy of {name!r} is outside [0, 1]: {acc}")
        return self


def save_report(report: MetricReport, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, dump_json(report.model_dump(exclude_none=True)))
    logger.info(f"Wrote {report.mode} report to {path}")


def load_report(path: Union[str, Path]) -> MetricReport:
    """Read a metrics report.

    Raises:
        MissingFileError: If the file does not exist.
        FormatError: On invalid JSON or fields outside the report layout.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    try:
        raw = orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc})", path=path, offset=getattr(exc, "pos", None)) from exc
    try:
        return MetricReport.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(p) for p in first["loc"]) or "<root>"
        raise FormatError(f"{location}: {first['msg']}", path=path) from exc
