"""Tests for patch feature files."""
import struct

import numpy as np
import pytest

from core.data_1_2_0.features import PatchFeatureRecord, labels_path, load_features, save_features
from core.utils.errors import FormatError, MissingFileError, NonFiniteError


def _records(rng, count=2, n_patches=4, d=8):
    return [PatchFeatureRecord(class_name=f"c{i}", features=rng.normal(size=(n_patches + 1, d)).astype(np.float32))
            for i in range(count)]


def test_header_arithmetic(tmp_path, rng):
    """Test a file with count=2, N=4, d=8.

    This test verifies that:
    1. The file is 20 header bytes plus 2*5*8*4 body bytes
    2. Two records of shape 5x8 load back with their labels
    3. Values equal the float32 originals
    """
    records = _records(rng)
    path = tmp_path / "train.features"
    save_features(records, path)
    assert path.stat().st_size == 20 + 2 * 5 * 8 * 4
    loaded = load_features(path)
    assert [r.features.shape for r in loaded] == [(5, 8), (5, 8)]
    assert [r.class_name for r in loaded] == ["c0", "c1"]
    assert loaded[0].n_patches == 4
    assert loaded[0].features.dtype == np.float64
    np.testing.assert_array_equal(loaded[1].features, records[1].features)
    assert labels_path(path).read_text() == "c0\nc1\n"


def test_truncated_blob(tmp_path, rng):
    """Test a body shorter than its header promises.

    This test verifies that:
    1. FormatError mentions truncation
    2. Trailing bytes are rejected as well
    """
    path = tmp_path / "train.features"
    save_features(_records(rng), path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-4])
    with pytest.raises(FormatError, match="truncated"):
        load_features(path)
    path.write_bytes(blob + b"\x00" * 4)
    with pytest.raises(FormatError, match="trailing"):
        load_features(path)


def test_nan_names_record(tmp_path, rng):
    """Test non-finite detection.

    This test verifies that:
    1. A NaN in the second record raises NonFiniteError naming record 1
    """
    records = _records(rng)
    records[1].features[2, 3] = np.nan
    path = tmp_path / "train.features"
    save_features(records, path)
    with pytest.raises(NonFiniteError, match="record 1"):
        load_features(path)


def test_header_errors(tmp_path, rng):
    """Test magic and version checks.

    This test verifies that:
    1. Wrong magic raises FormatError at byte 0
    2. An unknown version raises FormatError
    3. A missing labels sidecar raises MissingFileError
    """
    path = tmp_path / "train.features"
    save_features(_records(rng), path)
    blob = path.read_bytes()
    path.write_bytes(b"XXXX" + blob[4:])
    with pytest.raises(FormatError) as info:
        load_features(path)
    assert info.value.offset == 0
    path.write_bytes(blob[:4] + struct.pack("<I", 9) + blob[8:])
    with pytest.raises(FormatError, match="version"):
        load_features(path)
    path.write_bytes(blob)
    labels_path(path).unlink()
    with pytest.raises(MissingFileError):
        load_features(path)


def test_label_count_mismatch(tmp_path, rng):
    """Test the sidecar manifest check.

    This test verifies that:
    1. Fewer labels than records raises FormatError
    """
    path = tmp_path / "train.features"
    save_features(_records(rng), path)
    labels_path(path).write_text("c0\n")
    with pytest.raises(FormatError, match="labels"):
        load_features(path)
