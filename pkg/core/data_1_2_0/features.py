"""
Frozen-backbone patch feature files.

Binary layout (little-endian)::

    magic  b"I2MV"
    u32    version (1)
    u32    record count
    u32    N  (patches per image)
    u32    d_backbone
    f32    count * (N+1) * d_backbone values, row 0 of each record = global feature

A sidecar text file with the same stem and suffix ``.labels`` lists one
class name per record per line.
"""

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from core.utils.config import FEATURE_MAGIC, FEATURE_VERSION, config
from core.utils.errors import FormatError, MissingFileError, NonFiniteError
from core.utils.helpers import atomic_write_bytes
from core.utils.logging import get_logger

logger = get_logger(__name__)

_HEADER = struct.Struct("<4sIIII")


@dataclass
class PatchFeatureRecord:
    """One image: (N+1)×d_backbone features and its class name."""

    class_name: str
    features: np.ndarray

    @property
    def n_patches(self) -> int:
        return self.features.shape[0] - 1

    @property
    def d_backbone(self) -> int:
        return self.features.shape[1]


def labels_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_suffix(config["files"]["labels_suffix"])


def _parse_header(blob: bytes, path) -> Tuple[int, int, int]:
    if len(blob) < _HEADER.size:
        raise FormatError(f"header needs {_HEADER.size} bytes, file has {len(blob)}", path=path, offset=len(blob))
    magic, version, count, n_patches, d_backbone = _HEADER.unpack_from(blob, 0)
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path=path, offset=0)
    if version != FEATURE_VERSION:
        raise FormatError(f"unsupported version {version}", path=path, offset=4)
    if n_patches < 1:
        raise FormatError("N must be at least 1", path=path, offset=12)
    if d_backbone < 1:
        raise FormatError("d_backbone must be at least 1", path=path, offset=16)
    return count, n_patches, d_backbone


def load_features(path: Union[str, Path]) -> List[PatchFeatureRecord]:
    """Load a feature file and resolve labels from its sidecar manifest.

    Values are promoted from float32 to float64.

    Raises:
        MissingFileError: If the feature file or its labels file is missing.
        FormatError: On bad magic, version mismatch, truncation or label count mismatch.
        NonFiniteError: If any value is NaN or Inf (names the record index).
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    blob = path.read_bytes()
    count, n_patches, d_backbone = _parse_header(blob, path)

    rows = n_patches + 1
    expected = count * rows * d_backbone * 4
    body = len(blob) - _HEADER.size
    if body < expected:
        raise FormatError(
            f"truncated: {count} records of {rows}x{d_backbone} need {expected} bytes, found {body}",
            path=path, offset=len(blob),
        )
    if body > expected:
        raise FormatError(f"{body - expected} trailing bytes after the last record",
                          path=path, offset=_HEADER.size + expected)

    values = np.frombuffer(blob, dtype="<f4", count=count * rows * d_backbone, offset=_HEADER.size)
    values = values.astype(np.float64).reshape(count, rows, d_backbone)
    finite = np.isfinite(values).reshape(count, -1).all(axis=1)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise NonFiniteError(f"{path}: record {bad} contains non-finite values")

    names = _load_labels(labels_path(path), count)
    records = [PatchFeatureRecord(class_name=name, features=values[i]) for i, name in enumerate(names)]
    logger.info(f"Loaded {count} feature records (N={n_patches}, d={d_backbone}) from {path}")
    return records


def _load_labels(path: Path, count: int) -> List[str]:
    if not path.is_file():
        raise MissingFileError(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8 ({exc.reason})", path=path, offset=exc.start) from exc
    names = text.split("\n")
    if names and names[-1] == "":
        names.pop()
    if len(names) != count:
        raise FormatError(f"{len(names)} labels for {count} records", path=path)
    for line_no, name in enumerate(names, start=1):
        if not name.strip():
            raise FormatError("empty class name", path=path, line=line_no)
    return [n.strip() for n in names]


def save_features(records: Sequence[PatchFeatureRecord], path: Union[str, Path]) -> None:
    """Write records and their labels sidecar.

    Raises:
        FormatError: If records disagree on (N, d_backbone).
    """
    path = Path(path)
    if records:
        shape = records[0].features.shape
        for i, rec in enumerate(records):
            if rec.features.ndim != 2 or rec.features.shape != shape:
                raise FormatError(f"record {i} has shape {rec.features.shape}, expected {shape}")
        n_patches, d_backbone = shape[0] - 1, shape[1]
    else:
        n_patches, d_backbone = 1, 1
    header = _HEADER.pack(FEATURE_MAGIC, FEATURE_VERSION, len(records), n_patches, d_backbone)
    body = b"".join(np.ascontiguousarray(r.features, dtype="<f4").tobytes() for r in records)
    atomic_write_bytes(path, header + body)
    labels = "".join(f"{r.class_name}\n" for r in records)
    atomic_write_bytes(labels_path(path), labels.encode("utf-8"))
