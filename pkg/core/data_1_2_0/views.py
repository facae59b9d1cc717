"""
View corpora: per-class lists of text descriptions with split labels.

File layout (JSON)::

    {"classes": [{"name": "zebra", "split": "unseen",
                  "views": ["...", "..."], "source_tags": ["llm", "wiki"]}]}
"""

from pathlib import Path
from typing import Dict, Iterable, List, Literal, Optional, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.utils.errors import (
    DisjointnessError,
    DuplicateError,
    FormatError,
    MissingFileError,
    ViewCorpusError,
)
from core.utils.helpers import atomic_write_bytes, dump_json
from core.utils.logging import get_logger

logger = get_logger(__name__)

Split = Literal["seen", "val", "unseen"]
SPLITS = ("seen", "val", "unseen")


class ClassViews(BaseModel):
    """One class and its q text views."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    split: Split
    views: List[str]
    source_tags: Optional[List[str]] = None

    @field_validator("name")
    @classmethod
    def _strip_name(cls, value: str) -> str:
        value = value.strip()
        if not value:
            raise ValueError("class name is empty")
        return value

    @field_validator("views")
    @classmethod
    def _non_empty_views(cls, views: List[str]) -> List[str]:
        if not views:
            raise ValueError("class has no views")
        for i, view in enumerate(views):
            if not view.strip():
                raise ValueError(f"view {i} is an empty string")
        return views

    @model_validator(mode="after")
    def _tags_match_views(self) -> "ClassViews":
        if self.source_tags is not None and len(self.source_tags) != len(self.views):
            raise ValueError(
                f"{len(self.source_tags)} source tags for {len(self.views)} views"
            )
        return self

    @property
    def q(self) -> int:
        return len(self.views)


class ViewCorpus(BaseModel):
    """Validated collection of classes with their views."""

    model_config = ConfigDict(extra="forbid")

    classes: List[ClassViews] = Field(default_factory=list)

    def names(self) -> List[str]:
        return [c.name for c in self.classes]

    def get(self, name: str) -> ClassViews:
        for record in self.classes:
            if record.name == name:
                return record
        raise KeyError(name)

    def split(self, split: str) -> List[ClassViews]:
        """Classes of one split, in corpus order."""
        return [c for c in self.classes if c.split == split]

    def split_of(self, name: str) -> str:
        return self.get(name).split

    def view_counts(self) -> Dict[str, int]:
        return {c.name: c.q for c in self.classes}

    @property
    def q(self) -> Optional[int]:
        """Views per class when uniform, else None."""
        counts = {c.q for c in self.classes}
        return counts.pop() if len(counts) == 1 else None


def validate_corpus(corpus: ViewCorpus, allow_ragged_views: bool = False) -> ViewCorpus:
    """Check cross-class invariants: unique names, disjoint splits, uniform q.

    Raises:
        DisjointnessError: If one class name is listed under two splits.
        DuplicateError: If a class name repeats within a split.
        ViewCorpusError: If view counts differ and ragged views are not allowed.
    """
    seen_splits: Dict[str, str] = {}
    for record in corpus.classes:
        previous = seen_splits.get(record.name)
        if previous is not None:
            if previous != record.split:
                raise DisjointnessError(
                    f"class {record.name!r} is listed under both {previous!r} and {record.split!r}"
                )
            raise DuplicateError(f"class {record.name!r} is listed twice")
        seen_splits[record.name] = record.split

    if not allow_ragged_views and corpus.classes and corpus.q is None:
        counts = sorted({c.q for c in corpus.classes})
        raise ViewCorpusError(
            f"classes have differing view counts {counts}; set allow_ragged_views to accept this"
        )
    return corpus


def parse_views(payload: bytes, allow_ragged_views: bool = False, source: str = "<bytes>") -> ViewCorpus:
    try:
        raw = orjson.loads(payload)
    except orjson.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON ({exc})", path=source, offset=getattr(exc, "pos", None)) from exc
    if not isinstance(raw, dict) or "classes" not in raw:
        raise ViewCorpusError(f"{source}: top-level key 'classes' is missing")
    try:
        corpus = ViewCorpus.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(p) for p in first["loc"])
        raise ViewCorpusError(f"{source}: {location}: {first['msg']}") from exc
    return validate_corpus(corpus, allow_ragged_views=allow_ragged_views)


def load_views(path: Union[str, Path], allow_ragged_views: bool = False) -> ViewCorpus:
    """Load and validate a view corpus file."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(path)
    corpus = parse_views(path.read_bytes(), allow_ragged_views=allow_ragged_views, source=str(path))
    logger.info(
        f"Loaded {len(corpus.classes)} classes from {path} "
        f"(seen={len(corpus.split('seen'))}, val={len(corpus.split('val'))}, unseen={len(corpus.split('unseen'))})"
    )
    return corpus


def save_views(corpus: ViewCorpus, path: Union[str, Path]) -> None:
    atomic_write_bytes(path, dump_json(corpus.model_dump(exclude_none=True)))


def build_corpus(classes: Iterable[ClassViews], allow_ragged_views: bool = False) -> ViewCorpus:
    """Assemble and validate a corpus from in-memory records."""
    return validate_corpus(ViewCorpus(classes=list(classes)), allow_ragged_views=allow_ragged_views)
