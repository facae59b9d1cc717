"""
Model checkpoints.

Binary layout (little-endian)::

    magic  b"I2MVCKPT"
    u32    version
    u32    index length in bytes
    JSON   index {"config": {...}, "dtype": "f8", "tensors": {name: {"shape": [...], "offset": int}}}
    blob   raw tensor values; offsets are relative to the blob start
"""

import math
import struct
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Tuple, Union

import numpy as np
import orjson

from core.utils.config import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from core.utils.errors import DuplicateError, FormatError, MissingFileError
from core.utils.helpers import atomic_write_bytes
from core.utils.logging import get_logger

logger = get_logger(__name__)

_HEADER = struct.Struct("<8sII")
_DTYPES = {"f8": "<f8", "f4": "<f4"}


def save_checkpoint(named_params: Iterable[Tuple[str, np.ndarray]], config: Mapping[str, Any],
                    path: Union[str, Path], dtype: str = "f8") -> None:
    """Write parameters and the config echo.

    Args:
        named_params: (name, array) pairs; arrays may also be Tensors.
        config: JSON-serialisable configuration echo.
        dtype: "f8" (bit-exact round trip) or "f4" (compact).

    Raises:
        DuplicateError: If two parameters share a name.
    """
    if dtype not in _DTYPES:
        raise ValueError(f"dtype must be one of {sorted(_DTYPES)}, got {dtype!r}")
    tensors: Dict[str, Dict[str, Any]] = {}
    chunks = []
    offset = 0
    for name, value in named_params:
        array = np.asarray(getattr(value, "data", value))
        if name in tensors:
            raise DuplicateError(f"parameter name {name!r} appears twice")
        raw = np.ascontiguousarray(array, dtype=_DTYPES[dtype]).tobytes()
        tensors[name] = {"shape": list(array.shape), "offset": offset}
        chunks.append(raw)
        offset += len(raw)

    index = orjson.dumps({"config": config, "dtype": dtype, "tensors": tensors},
                         option=orjson.OPT_SERIALIZE_NUMPY)
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, len(index))
    atomic_write_bytes(path, header + index + b"".join(chunks))
    logger.info(f"Saved checkpoint with {len(tensors)} tensors to {path}")


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """Read a checkpoint back into (name → array, config).

    Raises:
        MissingFileError: If the file does not exist.
        FormatError: On bad magic, version, malformed index, overlapping tensors
            or index/blob length mismatch.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FormatError(f"header needs {_HEADER.size} bytes, file has {len(blob)}", path=path, offset=len(blob))
    magic, version, index_len = _HEADER.unpack_from(blob, 0)
    if magic != CHECKPOINT_MAGIC:
        raise FormatError(f"bad magic {magic!r}", path=path, offset=0)
    if version != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported version {version}", path=path, offset=8)
    index_end = _HEADER.size + index_len
    if index_end > len(blob):
        raise FormatError(f"index of {index_len} bytes runs past end of file", path=path, offset=_HEADER.size)
    try:
        index = orjson.loads(blob[_HEADER.size:index_end])
    except orjson.JSONDecodeError as exc:
        raise FormatError(f"index is not valid JSON ({exc})", path=path, offset=_HEADER.size) from exc
    if not isinstance(index, dict) or not isinstance(index.get("tensors"), dict):
        raise FormatError("index lacks a 'tensors' mapping", path=path, offset=_HEADER.size)
    raw_dtype = index.get("dtype", "f4")
    dtype = _DTYPES.get(raw_dtype) if isinstance(raw_dtype, str) else None
    if dtype is None:
        raise FormatError(f"unknown dtype {index.get('dtype')!r}", path=path, offset=_HEADER.size)
    config = index.get("config") or {}
    if not isinstance(config, dict):
        raise FormatError("config echo is not a mapping", path=path, offset=_HEADER.size)

    data = blob[index_end:]
    itemsize = np.dtype(dtype).itemsize
    params: Dict[str, np.ndarray] = {}
    spans: List[Tuple[int, int, str]] = []
    used = 0
    for name, entry in index["tensors"].items():
        try:
            shape = tuple(int(d) for d in entry["shape"])
            start = int(entry["offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed index entry for {name!r}", path=path, offset=_HEADER.size) from exc
        if any(d < 0 for d in shape) or start < 0:
            raise FormatError(f"negative shape or offset for {name!r}", path=path, offset=_HEADER.size)
        count = math.prod(shape)
        end = start + count * itemsize
        if end > len(data):
            raise FormatError(f"tensor {name!r} runs past the end of the blob", path=path, offset=index_end + start)
        params[name] = np.frombuffer(data, dtype=dtype, count=count, offset=start).astype(np.float64).reshape(shape)
        used += count * itemsize
        if count:
            spans.append((start, end, name))
    spans.sort()
    for (_, prev_end, prev), (start, _, name) in zip(spans, spans[1:]):
        if start < prev_end:
            raise FormatError(f"tensors {prev!r} and {name!r} overlap", path=path, offset=index_end + start)
    if used != len(data):
        raise FormatError(f"index covers {used} bytes but blob holds {len(data)}", path=path, offset=index_end)
    logger.info(f"Loaded checkpoint with {len(params)} tensors from {path}")
    return params, config
