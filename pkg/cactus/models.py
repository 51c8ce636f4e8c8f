"""Shared domain types for the CACTUS classifier."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Union


class FeatureKind(str, Enum):
    """How a feature is abstracted into flips."""

    CONTINUOUS = "continuous"
    CATEGORICAL = "categorical"


class Metric(str, Enum):
    """The three flip-significance metrics.

    The declaration order is the index order of the significance tensor.
    """

    CPB = "CPB"  # class-conditional probability only
    CDG = "CDG"  # probability x total degree
    CPR = "CPR"  # probability x PageRank

    @property
    def index(self) -> int:
        """Position of the metric in the significance tensor."""
        return list(Metric).index(self)

    @classmethod
    def parse(cls, value: Union[str, "Metric"]) -> "Metric":
        """Parse a metric name, case-insensitive.

        Raises:
            ValueError: If the name is not one of CPB, CDG, CPR
        """
        if isinstance(value, Metric):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(
                f"Unknown metric '{value}' (expected one of CPB, CDG, CPR)"
            ) from None

    @classmethod
    def parse_list(cls, values: Union[str, Iterable[str], None]) -> List["Metric"]:
        """Parse a comma-separated list (or iterable) of metric names.

        Duplicates are dropped and the canonical CPB, CDG, CPR order is kept.
        An empty selection means all three metrics.
        """
        if values is None:
            return list(cls)
        if isinstance(values, str):
            values = [v for v in values.split(",") if v.strip()]
        chosen = {cls.parse(v) for v in values}
        if not chosen:
            return list(cls)
        return [m for m in cls if m in chosen]


@dataclass(frozen=True)
class FeatureSchema:
    """Name and kind of one feature column.

    `declared` is True when the kind was forced by the schema config rather
    than detected from the observed values.
    """

    name: str
    kind: FeatureKind
    declared: bool = False


@dataclass(frozen=True)
class Flip:
    """A discrete feature state: Up/Down for continuous, one per level otherwise."""

    feature: str
    level: str

    @property
    def name(self) -> str:
        """Display name, feature and level joined by "_"."""
        return f"{self.feature}_{self.level}"

    def __str__(self) -> str:
        return self.name
