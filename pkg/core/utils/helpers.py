import hashlib
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping, Union

import orjson


def stable_hash(payload: Mapping[str, Any]) -> str:
    """Return the SHA-256 hex digest of a JSON-serialisable mapping.

    Keys are sorted so the digest does not depend on insertion order.
    """
    blob = orjson.dumps(payload, option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(blob).hexdigest()


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> None:
    """Write bytes to a file via a temporary sibling and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise


def dump_json(payload: Any) -> bytes:
    """Serialise structured text the same way everywhere (indented, numpy aware)."""
    return orjson.dumps(
        payload,
        option=orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_APPEND_NEWLINE,
    )


def format_error_message(error):
    """Format an error message for logging.

    Args:
        error: The error object or message.

    Returns:
        A formatted error message.
    """
    return f"Error: {str(error)}"
