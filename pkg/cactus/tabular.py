"""Data model, CSV ingestion and feature-pool filtering for mixed tables.

A :class:`Dataset` holds one numpy column per feature. Continuous columns are
``float64`` with ``NaN`` marking a missing cell; categorical columns are
``object`` arrays of strings with ``None`` marking a missing cell.
"""

import logging
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import (
    TYPE_CHECKING,
    Any,
    Dict,
    FrozenSet,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np
import pandas as pd

from cactus.errors import ConfigError, DataLoadError, DegenerateFeatureError, FilterError
from cactus.models import FeatureKind, FeatureSchema
from cactus.utils import read_json, write_json

if TYPE_CHECKING:
    from cactus.explain import RankReport

logger = logging.getLogger(__name__)

DEFAULT_MISSING_MARKERS: Tuple[str, ...] = ("", "NA", "NaN")
MAX_CATEGORICAL_LEVELS = 10
_LONG_ROW = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


@dataclass(frozen=True)
class SchemaConfig:
    """Schema configuration document for :func:`load_csv`.

    Attributes:
        label_column: Name of the class label column
        missing_markers: Cell values read as missing (case-insensitive)
        categorical: Features forced categorical
        continuous: Features forced continuous
        excluded: Features not loaded at all
        class_names: Optional explicit class order
    """

    label_column: str = "label"
    missing_markers: Tuple[str, ...] = DEFAULT_MISSING_MARKERS
    categorical: Tuple[str, ...] = ()
    continuous: Tuple[str, ...] = ()
    excluded: Tuple[str, ...] = ()
    class_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        if not self.label_column:
            raise ConfigError("label_column must be a non-empty name")
        both = set(self.categorical) & set(self.continuous)
        if both:
            raise ConfigError(
                f"Features declared both categorical and continuous: {sorted(both)}"
            )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SchemaConfig":
        """Build a config from a parsed JSON object, rejecting unknown keys."""
        known = {
            "label_column",
            "missing_markers",
            "categorical",
            "continuous",
            "excluded",
            "class_names",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"Unknown schema config keys: {sorted(unknown)}")
        kwargs: Dict[str, Any] = {}
        if "label_column" in data:
            kwargs["label_column"] = str(data["label_column"])
        for key in ("missing_markers", "categorical", "continuous", "excluded"):
            if key in data:
                if not isinstance(data[key], list):
                    raise ConfigError(f"Schema config key '{key}' must be a list")
                kwargs[key] = tuple(str(v) for v in data[key])
        if data.get("class_names") is not None:
            kwargs["class_names"] = tuple(str(v) for v in data["class_names"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SchemaConfig":
        """Load a schema from a JSON file."""
        data = read_json(path)
        if not isinstance(data, dict):
            raise ConfigError(f"Schema config {path} must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready schema."""
        data: Dict[str, Any] = {
            "label_column": self.label_column,
            "missing_markers": list(self.missing_markers),
            "categorical": list(self.categorical),
            "continuous": list(self.continuous),
            "excluded": list(self.excluded),
        }
        if self.class_names is not None:
            data["class_names"] = list(self.class_names)
        return data

    def declared_kind(self, name: str) -> Optional[FeatureKind]:
        """Kind forced by the schema, or None to detect it."""
        if name in self.categorical:
            return FeatureKind.CATEGORICAL
        if name in self.continuous:
            return FeatureKind.CONTINUOUS
        return None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-typed table with explicit missing cells and class labels.

    Attributes:
        schema: One FeatureSchema per column
        columns: One array per feature (see module docstring for encoding)
        labels: Class index per row, or None for unlabelled samples
        class_names: Class label per index
    """

    schema: Tuple[FeatureSchema, ...]
    columns: Tuple[np.ndarray, ...]
    labels: Optional[np.ndarray]
    class_names: Tuple[str, ...]

    def __post_init__(self):
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise ValueError("Feature names must be unique")
        if len(self.columns) != len(self.schema):
            raise ValueError(
                f"Dataset has {len(self.schema)} features but {len(self.columns)} columns"
            )
        if len(self.class_names) < 2:
            raise ValueError("A dataset needs at least 2 classes")
        n_rows = self.n_rows
        if n_rows < 1:
            raise ValueError("A dataset needs at least 1 row")
        for feature, column in zip(self.schema, self.columns):
            if column.shape != (n_rows,):
                raise ValueError(
                    f"Column '{feature.name}' has {column.shape[0]} cells, expected {n_rows}"
                )
            column.flags.writeable = False
        if self.labels is not None:
            if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
                raise ValueError(
                    f"Labels must lie in [0, {len(self.class_names)})"
                )
            self.labels.flags.writeable = False

    @property
    def n_rows(self) -> int:
        """Number of samples."""
        if self.labels is not None:
            return int(self.labels.shape[0])
        return int(self.columns[0].shape[0]) if self.columns else 0

    @property
    def n_features(self) -> int:
        """Number of features."""
        return len(self.schema)

    @property
    def n_classes(self) -> int:
        """Number of classes."""
        return len(self.class_names)

    @property
    def feature_names(self) -> List[str]:
        """Feature names, in schema order."""
        return [f.name for f in self.schema]

    def feature_index(self, name: str) -> int:
        """Position of a feature in the schema."""
        for i, feature in enumerate(self.schema):
            if feature.name == name:
                return i
        raise KeyError(name)

    def column(self, name: str) -> np.ndarray:
        """Values of one feature."""
        return self.columns[self.feature_index(name)]

    def missing_mask(self) -> np.ndarray:
        """Boolean N x F matrix, True where a cell is missing."""
        if not self.columns:
            return np.zeros((self.n_rows, 0), dtype=bool)
        return np.column_stack([column_missing(c) for c in self.columns])

    def observed_count(self, name: str) -> int:
        """Number of non-missing values of one feature."""
        return int((~column_missing(self.column(name))).sum())

    def check_class_coverage(self) -> None:
        """Raise unless every class index appears among the labels."""
        if self.labels is None:
            raise ValueError("Dataset has no labels")
        counts = np.bincount(self.labels, minlength=self.n_classes)
        absent = [self.class_names[i] for i in np.flatnonzero(counts == 0)]
        if absent:
            raise ValueError(f"Classes without any row: {absent}")

    def take(self, rows: Sequence[int]) -> "Dataset":
        """Return the subset of rows, in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            columns=tuple(c[rows] for c in self.columns),
            labels=None if self.labels is None else self.labels[rows],
        )

    def select_features(self, names: Iterable[str]) -> "Dataset":
        """Return the dataset restricted to `names`, keeping schema order."""
        keep = set(names)
        idx = [i for i, f in enumerate(self.schema) if f.name in keep]
        return replace(
            self,
            schema=tuple(self.schema[i] for i in idx),
            columns=tuple(self.columns[i] for i in idx),
        )

    def with_columns(self, columns: Sequence[np.ndarray]) -> "Dataset":
        """Copy of the dataset with replaced feature columns."""
        return replace(self, columns=tuple(columns))

    def row(self, i: int) -> List[Any]:
        """Raw cells of row `i`; missing cells are None."""
        cells: List[Any] = []
        for feature, column in zip(self.schema, self.columns):
            value = column[i]
            if feature.kind is FeatureKind.CONTINUOUS:
                cells.append(None if math.isnan(value) else float(value))
            else:
                cells.append(value)
        return cells

    def equals(self, other: "Dataset") -> bool:
        """Cell-identical comparison including missing positions."""
        if self.schema != other.schema or self.class_names != other.class_names:
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        for feature, a, b in zip(self.schema, self.columns, other.columns):
            if feature.kind is FeatureKind.CONTINUOUS:
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif list(a) != list(b):
                return False
        return True


@dataclass(frozen=True)
class FilterSpec:
    """Feature-pool filter.

    Attributes:
        excluded: Feature names removed outright
        max_missing_fraction: Features missing in a larger fraction of rows are dropped
        keep_top_k_by_rank: Keep only the k features with the highest average rank
    """

    excluded: FrozenSet[str] = field(default_factory=frozenset)
    max_missing_fraction: float = 1.0
    keep_top_k_by_rank: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "excluded", frozenset(self.excluded))
        if not 0.0 <= self.max_missing_fraction <= 1.0:
            raise ConfigError(
                f"max_missing_fraction must lie in [0, 1], got {self.max_missing_fraction}"
            )
        if self.keep_top_k_by_rank is not None and self.keep_top_k_by_rank < 1:
            raise ConfigError(
                f"keep_top_k_by_rank must be >= 1, got {self.keep_top_k_by_rank}"
            )

    @property
    def is_identity(self) -> bool:
        """True when the spec leaves every feature as it is."""
        return (
            not self.excluded
            and self.max_missing_fraction >= 1.0
            and self.keep_top_k_by_rank is None
        )


def column_missing(column: np.ndarray) -> np.ndarray:
    """Boolean mask of missing cells in one column."""
    if column.dtype.kind == "f":
        return np.isnan(column)
    return pd.isna(column)


def _parse_number(cell: Any) -> Optional[float]:
    if isinstance(cell, (int, float, np.integer, np.floating)) and not isinstance(cell, bool):
        return float(cell)
    try:
        return float(str(cell).strip())
    except ValueError:
        return None


def _is_integer(value: float) -> bool:
    return math.isfinite(value) and value == math.floor(value)


def detect_kind(
    column_values: Iterable[Any],
    override: Optional[FeatureKind] = None,
) -> FeatureKind:
    """Decide whether a feature is continuous or categorical.

    A feature is categorical iff every observed value is an integer and
    there are at most 10 distinct values. A config override wins.

    Args:
        column_values: Observed (non-missing) cells, as text or numbers
        override: Kind forced by the schema config

    Returns:
        The detected kind

    Raises:
        DegenerateFeatureError: If there are no observed values
    """
    values = list(column_values)
    if not values:
        raise DegenerateFeatureError("Cannot detect the kind of a feature with no observed values")
    if override is not None:
        return override
    distinct = set()
    for cell in values:
        number = _parse_number(cell)
        if number is None or not _is_integer(number):
            return FeatureKind.CONTINUOUS
        distinct.add(number)
        if len(distinct) > MAX_CATEGORICAL_LEVELS:
            return FeatureKind.CONTINUOUS
    return FeatureKind.CATEGORICAL


def level_label(cell: Any) -> str:
    """Canonical text of a categorical level ("2.0" and 2 both become "2")."""
    number = _parse_number(cell)
    if number is not None and _is_integer(number):
        return str(int(number))
    return str(cell).strip()


def level_sort_key(level: str) -> Tuple[int, float, str]:
    """Sort integer-valued levels numerically, before any text levels."""
    number = _parse_number(level)
    if number is not None and _is_integer(number):
        return (0, number, level)
    return (1, 0.0, level)


def _resolve_class_names(
    raw_labels: Sequence[str], explicit: Optional[Sequence[str]]
) -> Tuple[str, ...]:
    """Class order: `explicit` if given, else first appearance in the file.

    Exception: when every label is an integer the classes are sorted
    numerically, so "0".."K-1" labels map to indices 0..K-1 whatever
    the row order.
    """
    if explicit is not None:
        return tuple(explicit)
    distinct = list(dict.fromkeys(raw_labels))
    numbers = [_parse_number(v) for v in distinct]
    if all(n is not None and _is_integer(n) for n in numbers):
        return tuple(level_label(v) for v in sorted(distinct, key=lambda v: _parse_number(v)))
    return tuple(distinct)


def load_csv(
    path: Union[str, Path],
    config: Optional[SchemaConfig] = None,
    *,
    require_labels: bool = True,
    kinds: Optional[Mapping[str, FeatureKind]] = None,
    class_names: Optional[Sequence[str]] = None,
) -> Dataset:
    """Load a CSV file into a Dataset.

    Args:
        path: CSV file with a header row (UTF-8, RFC-4180 quoting)
        config: Schema configuration (defaults to label column "label")
        require_labels: Fail when the label column is absent
        kinds: Feature kinds forced by a trained model (wins over config and detection)
        class_names: Class order forced by a trained model

    Returns:
        Parsed Dataset; labels are None when the label column is absent
        and `require_labels` is False

    Raises:
        FileNotFoundError: If the file does not exist
        DataLoadError: On malformed rows, missing label column or bad cells
    """
    config = config or SchemaConfig()
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"CSV file not found: {path}")

    # the header is read as a data line so a surplus cell on every row
    # cannot turn into an implicit index column
    try:
        raw = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            na_values=[],
            engine="python",
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise DataLoadError(f"No header row in {path}") from None
    except pd.errors.ParserError as e:
        match = _LONG_ROW.search(str(e))
        if match is None:
            raise DataLoadError(f"Cannot parse {path}: {e}") from e
        width, line, _ = (int(g) for g in match.groups())
        raise DataLoadError(
            f"Row has more cells than the header in {path}",
            row=line,
            column=f"#{width + 1}",
        ) from e
    except UnicodeDecodeError as e:
        raise DataLoadError(f"Cannot parse {path}: {e}") from e
    if not isinstance(raw.index, pd.RangeIndex):
        raise DataLoadError(
            f"Row has more cells than the header in {path}", row=2, column=f"#{raw.shape[1] + 1}"
        )

    header = [str(c) for c in raw.iloc[0]]
    duplicated = sorted({c for c in header if header.count(c) > 1})
    if duplicated:
        raise DataLoadError(f"Duplicate column names {duplicated} in {path}", row=1)
    frame = raw.iloc[1:].reset_index(drop=True)
    frame.columns = header

    # short rows are padded with NaN by the parser; empty cells stay ""
    padded = frame.isna()
    if padded.values.any():
        row, col = np.argwhere(padded.values)[0]
        raise DataLoadError(
            f"Row has fewer cells than the header in {path}",
            row=int(row) + 2,
            column=str(frame.columns[col]),
        )
    if len(frame) == 0:
        raise DataLoadError(f"No data rows in {path}")

    markers = {m.strip().lower() for m in config.missing_markers}
    missing = frame.apply(lambda s: s.str.strip().str.lower().isin(markers))

    label_column = config.label_column
    labels: Optional[np.ndarray] = None
    if label_column in frame.columns:
        raw = frame[label_column]
        bad = np.flatnonzero(missing[label_column].values)
        if bad.size:
            raise DataLoadError(
                "Missing class label", row=int(bad[0]) + 2, column=label_column
            )
        raw_labels = [v.strip() for v in raw]
        names = _resolve_class_names(raw_labels, class_names or config.class_names)
        lookup = {name: i for i, name in enumerate(names)}
        encoded = []
        for i, value in enumerate(raw_labels):
            key = level_label(value) if value not in lookup else value
            if key not in lookup:
                raise DataLoadError(
                    f"Unknown class label '{value}'", row=i + 2, column=label_column
                )
            encoded.append(lookup[key])
        labels = np.asarray(encoded, dtype=np.int64)
    elif require_labels:
        raise DataLoadError(f"Label column '{label_column}' not found in {path}")
    else:
        names = tuple(class_names or config.class_names or ())

    excluded = set(config.excluded)
    schema: List[FeatureSchema] = []
    columns: List[np.ndarray] = []
    for name in frame.columns:
        if name == label_column or name in excluded:
            continue
        cells = frame[name].values
        is_missing = missing[name].values
        observed = [c for c, m in zip(cells, is_missing) if not m]

        forced = (kinds or {}).get(name)
        declared = forced or config.declared_kind(name)
        if not observed:
            kind = declared or FeatureKind.CONTINUOUS
            logger.warning("Feature '%s' has no observed values", name)
        else:
            kind = detect_kind(observed, declared)

        if kind is FeatureKind.CONTINUOUS:
            column = np.full(len(cells), np.nan)
            for i, (cell, m) in enumerate(zip(cells, is_missing)):
                if m:
                    continue
                number = _parse_number(cell)
                if number is None:
                    raise DataLoadError(
                        f"Non-numeric cell '{cell}' in continuous feature",
                        row=i + 2,
                        column=name,
                    )
                column[i] = number
        else:
            column = np.array(
                [None if m else level_label(c) for c, m in zip(cells, is_missing)],
                dtype=object,
            )
        schema.append(FeatureSchema(name=name, kind=kind, declared=declared is not None))
        columns.append(column)

    if len(names) < 2:
        raise DataLoadError(
            f"Need at least 2 classes, found {len(names)} in column '{label_column}'"
        )
    dataset = Dataset(
        schema=tuple(schema),
        columns=tuple(columns),
        labels=labels,
        class_names=tuple(names),
    )
    if labels is not None and require_labels:
        try:
            dataset.check_class_coverage()
        except ValueError as e:
            raise DataLoadError(f"{e} in {path}") from e
    logger.info(
        "Loaded %s: %d rows, %d features, %d classes",
        path,
        dataset.n_rows,
        dataset.n_features,
        dataset.n_classes,
    )
    return dataset


def schema_config_for(dataset: Dataset, label_column: str = "label") -> SchemaConfig:
    """Schema config that reloads `dataset` with identical kinds and classes."""
    return SchemaConfig(
        label_column=label_column,
        categorical=tuple(
            f.name for f in dataset.schema if f.kind is FeatureKind.CATEGORICAL
        ),
        continuous=tuple(
            f.name for f in dataset.schema if f.kind is FeatureKind.CONTINUOUS
        ),
        class_names=dataset.class_names,
    )


def write_csv(
    dataset: Dataset,
    path: Union[str, Path],
    label_column: str = "label",
    schema_path: Optional[Union[str, Path]] = None,
) -> Path:
    """Write a Dataset as CSV; missing cells become empty strings.

    Args:
        dataset: Dataset to write
        path: Output CSV path
        label_column: Header of the label column
        schema_path: Optional path for a matching schema config JSON

    Returns:
        Path of the written CSV
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data: Dict[str, List[str]] = {}
    for feature, column in zip(dataset.schema, dataset.columns):
        if feature.kind is FeatureKind.CONTINUOUS:
            data[feature.name] = ["" if math.isnan(v) else repr(float(v)) for v in column]
        else:
            data[feature.name] = ["" if v is None else str(v) for v in column]
    if dataset.labels is not None:
        data[label_column] = [dataset.class_names[i] for i in dataset.labels]
    frame = pd.DataFrame(data, columns=list(data))
    frame.to_csv(path, index=False, lineterminator="\n")
    if schema_path is not None:
        write_json(schema_path, schema_config_for(dataset, label_column).to_dict())
    return path


def apply_filter(
    d: Dataset,
    f: FilterSpec,
    ranks: Optional["RankReport"] = None,
) -> Dataset:
    """Drop features according to a FilterSpec.

    Constraints apply in order: explicit exclusions, features without any
    observed value, the missing-fraction ceiling, then the top-k by rank.
    Rows and labels are unchanged.

    Args:
        d: Dataset to filter
        f: Filter specification
        ranks: Rank report providing average ranks (required for top-k)

    Returns:
        Filtered Dataset

    Raises:
        FilterError: If the filter removes every feature, or top-k is
            requested without ranks
    """
    if f.keep_top_k_by_rank is not None and ranks is None:
        raise FilterError("keep_top_k_by_rank requires a rank report")

    names = d.feature_names
    unknown = sorted(set(f.excluded) - set(names))
    if unknown:
        logger.warning("Excluded features not in dataset (ignored): %s", unknown)

    kept = list(names)

    def _narrow(candidates: List[str], constraint: str) -> List[str]:
        if not candidates:
            raise FilterError(
                f"Filter removed every feature; last constraint applied: {constraint}"
            )
        dropped = len(kept) - len(candidates)
        if dropped:
            logger.info("Filter '%s' dropped %d features", constraint, dropped)
        return candidates

    kept = _narrow([n for n in kept if n not in f.excluded], "excluded")
    kept = _narrow([n for n in kept if d.observed_count(n) > 0], "no observed values")
    n_rows = d.n_rows
    kept = _narrow(
        [n for n in kept if (n_rows - d.observed_count(n)) / n_rows <= f.max_missing_fraction],
        f"max_missing_fraction={f.max_missing_fraction}",
    )

    if f.keep_top_k_by_rank is not None:
        avg = ranks.avg_ranks()
        ordered = sorted(kept, key=lambda n: (-avg.get(n, -math.inf), n))
        k = f.keep_top_k_by_rank
        if k > len(ordered):
            logger.warning(
                "keep_top_k_by_rank=%d exceeds the %d surviving features", k, len(ordered)
            )
        top = set(ordered[:k])
        kept = _narrow([n for n in kept if n in top], f"keep_top_k_by_rank={k}")

    if len(kept) == len(names):
        return d
    return d.select_features(kept)
