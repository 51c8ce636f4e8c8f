"""Exceptions raised by the CACTUS pipeline.

Every error derives from ``ValueError`` through :class:`CactusError`, so
callers validating input can keep catching ``ValueError``.
"""

from typing import Optional


class CactusError(ValueError):
    """Base class for all pipeline errors."""


class ConfigError(CactusError):
    """Invalid configuration document or option."""


class DataLoadError(CactusError):
    """A table could not be parsed; carries the offending position."""

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DegenerateFeatureError(CactusError):
    """A feature has no observed values or cannot be abstracted."""


class SchemaMismatchError(CactusError):
    """Samples do not match the schema a model was trained on."""


class FilterError(CactusError):
    """A feature filter would leave the dataset without features."""


class AbstractionError(CactusError):
    """Invalid input to the cut-off search or flip encoding."""


class KnowledgeGraphError(CactusError):
    """Invalid request against a class graph."""


class PageRankConvergenceError(CactusError):
    """Power iteration did not reach the tolerance."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"PageRank did not converge in {iterations} iterations "
            f"(final L1 residual {residual:.3e})"
        )


class StratificationError(CactusError):
    """A cross-validation split cannot represent every class."""


class ModelFormatError(CactusError):
    """A model file is malformed or from an unsupported format version."""
