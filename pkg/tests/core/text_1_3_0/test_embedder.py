"""Tests for view tokenisation and projection."""
import numpy as np
import pytest

from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.views import ClassViews, build_corpus
from core.text_1_3_0.embedder import TextProjector, encode_view, tokenize, tokenize_corpus, tokenize_view
from core.utils.errors import EmptyTableError, EmptyViewError


@pytest.fixture
def table(rng):
    words = ["the", "cardinal", "red", "bird", "wing", "a", "b", "c"]
    return EmbeddingTable(dim=4, entries={w: rng.normal(size=4) for w in words})


@pytest.mark.parametrize("text, tokens", [
    ("The Cardinal, red!", ["the", "cardinal", "red"]),
    ("", []),
    ("A-B  c", ["a", "b", "c"]),
    ("snake_case\tand\nlines", ["snake", "case", "and", "lines"]),
])
def test_tokenize(text, tokens):
    """Test the tokenisation rule.

    This test verifies that:
    1. Text is lowercased
    2. Punctuation and whitespace runs collapse to one separator
    3. Empty text yields no tokens
    """
    assert tokenize(text) == tokens


def test_encode_shape(table):
    """Test the encoded shape contract.

    This test verifies that:
    1. Five in-vocabulary tokens give a 5 x r tensor
    """
    proj = TextProjector(4, 6, np.random.default_rng(1))
    encoded = encode_view("the red cardinal bird wing", table, proj)
    assert encoded.tokens == ("the", "red", "cardinal", "bird", "wing")
    assert encoded.embedded.shape == (5, 6)


def test_oov_only_view(table):
    """Test a view without known words.

    This test verifies that:
    1. EmptyViewError is raised naming the class
    2. An empty table raises EmptyTableError
    """
    with pytest.raises(EmptyViewError, match="zebra"):
        tokenize_view("stripes everywhere", table, class_name="zebra")
    with pytest.raises(EmptyTableError):
        tokenize_view("red", EmbeddingTable(dim=4))


def test_filter_before_truncate(table):
    """Test the order of filtering and truncation.

    This test verifies that:
    1. Out-of-vocabulary words do not count towards m_max
    """
    view = tokenize_view("zzz the yyy red xxx wing bird", table, m_max=3)
    assert view.tokens == ("the", "red", "wing")
    np.testing.assert_array_equal(view.vectors, table.lookup(["the", "red", "wing"]))


def test_encoding_is_deterministic(table):
    """Test repeated encoding.

    This test verifies that:
    1. Encoding one text twice with fixed parameters gives identical tensors
    """
    proj = TextProjector(4, 6, np.random.default_rng(2))
    first = encode_view("a red bird", table, proj)
    second = encode_view("a red bird", table, proj)
    np.testing.assert_array_equal(first.embedded.data, second.embedded.data)


def test_tokenize_corpus(table):
    """Test corpus-level tokenisation.

    This test verifies that:
    1. Only the requested classes are tokenised
    2. Each class keeps one entry per view
    """
    corpus = build_corpus([
        ClassViews(name="cardinal", split="seen", views=["red bird", "the wing"]),
        ClassViews(name="crow", split="unseen", views=["a bird", "c wing"]),
    ])
    tokenized = tokenize_corpus(corpus, table, classes=["crow"])
    assert list(tokenized) == ["crow"]
    assert [v.tokens for v in tokenized["crow"]] == [("a", "bird"), ("c", "wing")]
