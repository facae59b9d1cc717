"""
GloVe-style word embedding tables.

File layout: UTF-8 text, one entry per line, ``<token> <f1> ... <fe>``.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Union

import numpy as np

from core.utils.errors import DuplicateError, EmptyTableError, FormatError, MissingFileError
from core.utils.helpers import atomic_write_bytes
from core.utils.logging import get_logger

logger = get_logger(__name__)


@dataclass
class EmbeddingTable:
    """Token → vector map with a uniform dimension."""

    dim: int
    entries: Dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def lookup(self, tokens: Iterable[str]) -> np.ndarray:
        """Stack the vectors of ``tokens`` into an M×e matrix."""
        rows = [self.entries[t] for t in tokens]
        if not rows:
            return np.zeros((0, self.dim))
        return np.stack(rows)


def load_embeddings(path: Union[str, Path]) -> EmbeddingTable:
    """Load an embedding file.

    The dimension is inferred from the first entry; tokens are lowercased.

    Raises:
        MissingFileError: If the file does not exist.
        FormatError: On ragged rows, unparsable numbers or invalid UTF-8 (with line number).
        DuplicateError: If a token appears twice.
        EmptyTableError: If the file holds no entries.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"not valid UTF-8 ({exc.reason})", path=path, offset=exc.start) from exc

    dim: Optional[int] = None
    entries: Dict[str, np.ndarray] = {}
    for line_no, line in enumerate(text.split("\n"), start=1):
        parts = line.split()
        if not parts:
            continue
        token, values = parts[0].lower(), parts[1:]
        if dim is None:
            if not values:
                raise FormatError("entry has no vector values", path=path, line=line_no)
            dim = len(values)
        if len(values) != dim:
            raise FormatError(f"expected {dim} values, found {len(values)}", path=path, line=line_no)
        try:
            vector = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise FormatError(f"unparsable number ({exc})", path=path, line=line_no) from exc
        if not np.all(np.isfinite(vector)):
            raise FormatError("non-finite value", path=path, line=line_no)
        if token in entries:
            raise DuplicateError(f"{path}: line {line_no}: duplicate token {token!r}")
        entries[token] = vector

    if dim is None:
        raise EmptyTableError(f"{path}: embedding file holds no entries")
    logger.info(f"Loaded {len(entries)} embeddings of dimension {dim} from {path}")
    return EmbeddingTable(dim=dim, entries=entries)


def save_embeddings(table: EmbeddingTable, path: Union[str, Path]) -> None:
    """Write a table so that ``load_embeddings`` restores every value exactly."""
    lines = [
        " ".join([token] + [repr(float(v)) for v in vector])
        for token, vector in table.entries.items()
    ]
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))
