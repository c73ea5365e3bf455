"""Exception hierarchy shared across the pipeline.

Three families map onto the CLI exit codes: configuration / contract
violations (exit 2), data problems (exit 3), numeric failures (exit 4).
"""

from __future__ import annotations


class GadError(Exception):
    """Base class for all library errors."""


class ConfigError(GadError):
    """Invalid configuration or violated call contract (exit code 2)."""


class DataError(GadError):
    """Malformed or infeasible input data (exit code 3)."""


class FormatError(DataError):
    """Malformed graph or checkpoint file."""


class NonFiniteFeatureError(DataError):
    """A feature entry is NaN or infinite."""

    def __init__(self, row: int, col: int | None = None):
        self.row = row
        self.col = col
        loc = f"row {row}" if col is None else f"row {row}, col {col}"
        super().__init__(f"non-finite feature at {loc}")


class IndexOutOfRangeError(DataError):
    """A node index in a file or argument list exceeds the graph size."""


class NoEdgesError(DataError):
    """Operation requires at least one edge (smoothness is undefined on m=0)."""


class InfeasibleSpecError(DataError):
    """An injection or generation spec cannot be satisfied on this graph."""


class InsufficientNormalsError(DataError):
    """Not enough normal nodes to draw context and query samples."""


class InsufficientAnomaliesError(DataError):
    """Not enough anomalous nodes to draw query samples."""


class NumericError(GadError):
    """Non-finite values or numerically degenerate state (exit code 4)."""


class DimensionMismatchError(NumericError):
    """Operand shapes do not agree."""


class DegenerateEmbeddingError(NumericError):
    """A zero-norm embedding row reached a cosine computation."""
