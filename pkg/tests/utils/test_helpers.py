"""Tests for the helper utilities module.

This module contains tests for the small helpers every component shares:
- Order-independent hashing of JSON payloads
- Atomic file writes
- Structured text serialisation
- Error message formatting
"""
import numpy as np
import orjson
import pytest

from core.utils.errors import FormatError
from core.utils.helpers import atomic_write_bytes, dump_json, format_error_message, stable_hash


def test_stable_hash():
    """Test payload hashing.

    This test verifies that:
    1. Key order does not change the digest
    2. Different values give different digests
    3. The digest is a 64-character hex string
    """
    a = stable_hash({"prompt": "x", "temperature": 0.9})
    b = stable_hash({"temperature": 0.9, "prompt": "x"})
    assert a == b
    assert a != stable_hash({"prompt": "x", "temperature": 0.5})
    assert len(a) == 64
    int(a, 16)


def test_atomic_write_bytes(tmp_path):
    """Test atomic writes.

    This test verifies that:
    1. Missing parent directories are created
    2. An existing file is replaced
    3. No temporary files are left behind
    """
    path = tmp_path / "nested" / "out.bin"
    atomic_write_bytes(path, b"first")
    atomic_write_bytes(path, b"second")
    assert path.read_bytes() == b"second"
    assert [p.name for p in path.parent.iterdir()] == ["out.bin"]


def test_dump_json():
    """Test structured text output.

    This test verifies that:
    1. Output is indented and ends with a newline
    2. numpy arrays are serialised
    """
    blob = dump_json({"a": 1, "v": np.array([1.5, 2.0])})
    assert blob.endswith(b"\n")
    assert b'\n  "a": 1' in blob
    assert orjson.loads(blob) == {"a": 1, "v": [1.5, 2.0]}


def test_format_error_message():
    """Test error message formatting.

    This test verifies that:
    1. Plain strings and exceptions are both prefixed
    2. Format errors keep their location prefix
    """
    assert format_error_message("boom") == "Error: boom"
    error = FormatError("bad magic", path="x.features", offset=0)
    message = format_error_message(error)
    assert message.startswith("Error: x.features")
    assert "bad magic" in message
