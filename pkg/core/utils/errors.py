"""
Exception hierarchy shared by every component.

Each class carries the process exit code the command line maps it to:
0 success, 1 runtime failure, 2 config/usage error, 3 data/format error.
"""

from typing import Optional


class MVFormerError(Exception):
    """Base exception for all project errors."""

    exit_code = 1


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class ConfigError(MVFormerError):
    """Raised when a configuration value or command-line usage is invalid."""

    exit_code = 2


class PoolSizeError(ConfigError):
    """Raised when an example pool does not hold exactly f+1 examples."""


# ---------------------------------------------------------------------------
# Data and file formats
# ---------------------------------------------------------------------------

class DataError(MVFormerError):
    """Raised when input data is missing or violates its layout."""

    exit_code = 3


class MissingFileError(DataError):
    """Raised when an input path does not exist."""

    def __init__(self, path):
        self.path = str(path)
        super().__init__(f"File not found: {self.path}")


class FormatError(DataError):
    """Raised when a file violates its stated layout.

    Carries the position (line number or byte offset) when one is known.
    """

    def __init__(self, message: str, *, path=None, line: Optional[int] = None,
                 offset: Optional[int] = None):
        self.path = str(path) if path is not None else None
        self.line = line
        self.offset = offset
        where = []
        if self.path:
            where.append(self.path)
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        prefix = f"{': '.join(where)}: " if where else ""
        super().__init__(f"{prefix}{message}")


class DuplicateError(DataError):
    """Raised when a token, class or tensor name appears twice."""


class EmptyTableError(DataError):
    """Raised when an embedding file holds no entries."""


class ViewCorpusError(DataError):
    """Raised when a view corpus fails validation."""


class DisjointnessError(ViewCorpusError):
    """Raised when a class is listed under more than one split."""


class NonFiniteError(DataError):
    """Raised when NaN or Inf values are found in numeric data."""


class LeakageError(DataError):
    """Raised when an unseen class relies on words no seen view contains."""


class SplitError(DataError):
    """Raised when a record belongs to the wrong split for an operation."""


class CoverageError(DataError):
    """Raised when a class in an evaluation set has no test records."""


class EmptyViewError(DataError):
    """Raised when a view has no in-vocabulary tokens."""


# ---------------------------------------------------------------------------
# Numerical engine and model
# ---------------------------------------------------------------------------

class ModelError(MVFormerError):
    """Base exception for tensor and model failures."""


class ShapeError(ModelError):
    """Raised when tensor dimensions do not agree."""


class AxisError(ModelError):
    """Raised when an axis is out of range for a tensor."""


class ClassIndexError(ModelError, IndexError):
    """Raised when a target index is outside the score vector."""


class RankError(ModelError):
    """Raised when a scalar was required but a higher-rank tensor was given."""


class TapeError(ModelError):
    """Raised when a tape is used in a way its recording does not support."""


class TapeConsumedError(TapeError):
    """Raised when backward runs twice on the same recording."""


class UninitializedGradientError(ModelError):
    """Raised when an optimizer step sees a parameter without a gradient."""


class NumericError(ModelError):
    """Raised when a function evaluation produces NaN or Inf."""


class DegenerateError(ModelError):
    """Raised when an operation would divide by zero."""


# ---------------------------------------------------------------------------
# Prompt generation
# ---------------------------------------------------------------------------

class PromptError(MVFormerError):
    """Base exception for view generation failures."""


class PoolExhaustedError(PromptError):
    """Raised when no example can replace one that names the query class."""


class LlmRequestError(PromptError):
    """Raised when the language model endpoint fails after all retries."""


class EmptyGenerationError(PromptError):
    """Raised when the language model returns an empty description."""
