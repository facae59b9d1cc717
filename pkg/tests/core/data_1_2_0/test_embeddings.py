"""Tests for the embedding loader."""
import numpy as np
import pytest

from core.data_1_2_0.embeddings import EmbeddingTable, load_embeddings, save_embeddings
from core.utils.errors import DuplicateError, EmptyTableError, FormatError, MissingFileError


def test_minimal_file(tmp_path):
    """Test loading a two-entry file.

    This test verifies that:
    1. The dimension is inferred from the first line
    2. Both entries are present with their values
    """
    path = tmp_path / "emb.txt"
    path.write_text("a 1.0 0.0\nb 0.0 1.0")
    table = load_embeddings(path)
    assert table.dim == 2
    assert len(table) == 2
    np.testing.assert_array_equal(table.lookup(["b", "a"]), [[0.0, 1.0], [1.0, 0.0]])


def test_ragged_line_is_positioned(tmp_path):
    """Test rejection of a ragged row.

    This test verifies that:
    1. A one-value line in a two-dimensional file raises FormatError
    2. The error carries line 3
    """
    path = tmp_path / "emb.txt"
    path.write_text("a 1.0 0.0\nb 0.0 1.0\nc 1.0\n")
    with pytest.raises(FormatError, match="line 3") as info:
        load_embeddings(path)
    assert info.value.line == 3


@pytest.mark.parametrize("content, error", [
    ("", EmptyTableError),
    ("\n\n", EmptyTableError),
    ("a 1.0\nA 2.0\n", DuplicateError),
    ("a 1.0 x\n", FormatError),
    ("a 1.0 nan\n", FormatError),
    ("a\n", FormatError),
])
def test_invalid_files(tmp_path, content, error):
    """Test the loader's error cases.

    This test verifies that:
    1. Empty files raise EmptyTableError
    2. Case-folded duplicates raise DuplicateError
    3. Unparsable, non-finite and value-less rows raise FormatError
    """
    path = tmp_path / "emb.txt"
    path.write_text(content)
    with pytest.raises(error):
        load_embeddings(path)


def test_missing_and_non_utf8(tmp_path):
    """Test file-level errors.

    This test verifies that:
    1. A missing path raises MissingFileError
    2. Invalid UTF-8 raises FormatError with a byte offset
    """
    with pytest.raises(MissingFileError):
        load_embeddings(tmp_path / "absent.txt")
    path = tmp_path / "emb.txt"
    path.write_bytes(b"a 1.0\n\xff\xfe 2.0\n")
    with pytest.raises(FormatError) as info:
        load_embeddings(path)
    assert info.value.offset == 6


def test_save_restores_values_exactly(tmp_path, rng):
    """Test that a saved table loads back bit-exactly.

    This test verifies that:
    1. Every vector is identical after save and load
    """
    table = EmbeddingTable(dim=3, entries={w: rng.normal(size=3) for w in ("x", "y", "z")})
    save_embeddings(table, tmp_path / "emb.txt")
    loaded = load_embeddings(tmp_path / "emb.txt")
    for word, vector in table.entries.items():
        np.testing.assert_array_equal(loaded.entries[word], vector)
