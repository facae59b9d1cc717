"""
View tokenisation and word-embedding projection.
"""

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from core.data_1_2_0.embeddings import EmbeddingTable
from core.data_1_2_0.views import ViewCorpus
from core.tensor_1_1_0.nn import ProjectionMLP
from core.tensor_1_1_0.tensor import Tensor
from core.utils.errors import EmptyTableError, EmptyViewError
from core.utils.logging import get_logger

logger = get_logger(__name__)

DEFAULT_M_MAX = 512

_NON_ALNUM = re.compile(r"[\W_]+")


def tokenize(text: str) -> List[str]:
    """Lowercase, replace every non-alphanumeric character by a space, split."""
    return _NON_ALNUM.sub(" ", text.lower()).split()


@dataclass(frozen=True)
class TokenizedView:
    """In-vocabulary tokens of one view and their raw word vectors (M×e)."""

    tokens: tuple
    vectors: np.ndarray

    @property
    def length(self) -> int:
        return len(self.tokens)


@dataclass
class EncodedView:
    """Projected view: tokens and an M×r tensor."""

    tokens: tuple
    embedded: Tensor


class TextProjector(ProjectionMLP):
    """Shallow learnable map from word-embedding space e to model space r."""


def tokenize_view(text: str, table: EmbeddingTable, m_max: int = DEFAULT_M_MAX,
                  class_name: Optional[str] = None) -> TokenizedView:
    """Tokenise, drop out-of-vocabulary tokens, then truncate to ``m_max``.

    Raises:
        EmptyTableError: If the table holds no entries.
        EmptyViewError: If no token is in the vocabulary.
    """
    if len(table) == 0:
        raise EmptyTableError("embedding table is empty")
    if m_max < 1:
        raise ValueError(f"m_max must be at least 1, got {m_max}")
    known = [t for t in tokenize(text) if t in table][:m_max]
    if not known:
        label = f"class {class_name!r}" if class_name else "view"
        raise EmptyViewError(f"{label} has a view with no in-vocabulary tokens: {text[:60]!r}")
    return TokenizedView(tokens=tuple(known), vectors=table.lookup(known))


def encode_view(text: str, table: EmbeddingTable, proj: TextProjector, m_max: int = DEFAULT_M_MAX,
                class_name: Optional[str] = None) -> EncodedView:
    """Tokenise a view and project its word vectors to M×r."""
    view = tokenize_view(text, table, m_max=m_max, class_name=class_name)
    return EncodedView(tokens=view.tokens, embedded=proj(Tensor(view.vectors)))


def tokenize_corpus(corpus: ViewCorpus, table: EmbeddingTable, m_max: int = DEFAULT_M_MAX,
                    classes: Optional[Sequence[str]] = None) -> Dict[str, List[TokenizedView]]:
    """Tokenise every view of the selected classes (all classes by default)."""
    names = list(classes) if classes is not None else corpus.names()
    tokenized = {
        name: [tokenize_view(v, table, m_max=m_max, class_name=name) for v in corpus.get(name).views]
        for name in names
    }
    lengths = [v.length for views in tokenized.values() for v in views]
    if lengths:
        logger.debug(f"Tokenized {len(lengths)} views of {len(names)} classes "
                     f"(tokens per view: min {min(lengths)}, max {max(lengths)})")
    return tokenized
