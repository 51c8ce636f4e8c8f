"""Abstraction of feature values into Up/Down and per-level flips.

Continuous features are split at the cut-off that best separates some
bipartition of the classes, searched exhaustively over every non-trivial
bipartition and every midpoint between consecutive distinct values.
Categorical features get one flip per observed level.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from cactus.errors import AbstractionError, DegenerateFeatureError, SchemaMismatchError
from cactus.models import FeatureKind, Flip
from cactus.tabular import Dataset, column_missing, level_label, level_sort_key
from cactus.utils import resolve_threads

logger = logging.getLogger(__name__)

MAX_CLASSES = 20
DOWN = "D"
UP = "U"
# cells per block of the cut-off search, over partitions x max(thresholds, classes)
SEARCH_CHUNK_CELLS = 1 << 20


@dataclass(frozen=True)
class Cutoff:
    """Learned split of one continuous feature.

    Attributes:
        feature: Feature name
        threshold: Values <= threshold map to the Down flip
        partition: Bitmask of the classes in group 1 (class 0 is always in group 0)
        achieved_ba: Direction-symmetrized balanced accuracy of the split
    """

    feature: str
    threshold: float
    partition: int
    achieved_ba: float

    def group_one(self, n_classes: int) -> List[int]:
        """Classes on the group-1 side of the partition."""
        return [k for k in range(n_classes) if self.partition >> k & 1]


def enumerate_bipartitions(n_classes: int) -> List[int]:
    """All non-trivial class bipartitions as bitmasks over group 1.

    Complementary masks are deduplicated by keeping class 0 in group 0,
    giving 2^(K-1) - 1 masks in ascending order.

    Raises:
        AbstractionError: If K < 2 or K > 20
    """
    if n_classes < 2:
        raise AbstractionError(f"Need at least 2 classes, got {n_classes}")
    if n_classes > MAX_CLASSES:
        raise AbstractionError(
            f"{n_classes} classes exceed the bipartition limit of {MAX_CLASSES}"
        )
    return [m << 1 for m in range(1, 2 ** (n_classes - 1))]


def best_cutoff(
    values: Sequence[float],
    labels: Sequence[int],
    partitions: Sequence[int],
    n_classes: Optional[int] = None,
    feature: str = "",
) -> Cutoff:
    """Exhaustive search for the best (partition, threshold) pair.

    For each partition and each candidate threshold, the rule
    "value <= threshold predicts group 0" is scored by balanced accuracy
    over the two groups, symmetrized as max(BA, 1 - BA). Ties go to the
    smallest partition mask, then the smallest threshold.

    Args:
        values: Observed values (missing rows already removed)
        labels: Class index per value
        partitions: Bitmasks from :func:`enumerate_bipartitions`
        n_classes: Number of classes (inferred from labels if omitted)
        feature: Feature name recorded in the result

    Returns:
        The winning Cutoff

    Raises:
        DegenerateFeatureError: If fewer than 2 distinct values are observed
        AbstractionError: If no partition has rows on both sides
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if values.shape != labels.shape:
        raise AbstractionError(
            f"{values.shape[0]} values but {labels.shape[0]} labels for '{feature}'"
        )
    distinct, inverse = np.unique(values, return_inverse=True)
    if distinct.size < 2:
        raise DegenerateFeatureError(f"Feature '{feature}' is constant over observed rows")
    if not partitions:
        raise AbstractionError("No class partitions to search")
    n_classes = n_classes or int(labels.max()) + 1

    counts = np.zeros((n_classes, distinct.size), dtype=np.int64)
    np.add.at(counts, (labels, inverse.ravel()), 1)
    # class k rows with value <= distinct[j], for every candidate j
    below = np.cumsum(counts, axis=1)[:, :-1]
    totals = counts.sum(axis=1)
    thresholds = (distinct[:-1] + distinct[1:]) / 2.0

    masks = np.asarray(partitions, dtype=np.int64)
    chunk = max(1, SEARCH_CHUNK_CELLS // max(thresholds.size, n_classes))
    best: Optional[Tuple[float, int, int]] = None
    for start in range(0, masks.size, chunk):
        block = masks[start : start + chunk]
        member = (block[:, None] >> np.arange(n_classes)) & 1
        n1 = member @ totals
        n0 = (1 - member) @ totals
        valid = (n0 > 0) & (n1 > 0)
        if not valid.any():
            continue
        below1 = member @ below
        below0 = (1 - member) @ below
        with np.errstate(divide="ignore", invalid="ignore"):
            recall0 = below0 / n0[:, None]
            recall1 = (n1[:, None] - below1) / n1[:, None]
            ba = (recall0 + recall1) / 2.0
        symmetric = np.maximum(ba, 1.0 - ba)
        symmetric[~valid, :] = -np.inf

        # argmax returns the first maximum: smallest mask, then smallest threshold;
        # a later block only wins with a strictly higher score
        p, t = divmod(int(np.argmax(symmetric)), symmetric.shape[1])
        if best is None or symmetric[p, t] > best[0]:
            best = (float(symmetric[p, t]), start + p, t)
    if best is None:
        raise AbstractionError(f"Feature '{feature}' is observed in a single class only")

    score, p, t = best
    return Cutoff(
        feature=feature,
        threshold=float(thresholds[t]),
        partition=int(masks[p]),
        achieved_ba=score,
    )


@dataclass(frozen=True, eq=False)
class AbstractionMap:
    """Learned abstraction of a dataset.

    Attributes:
        source_features: Every feature of the training schema, in order
        kinds: Kind per abstracted feature
        cutoffs: One Cutoff per abstracted continuous feature
        categorical_levels: Ordered observed levels per categorical feature
        flips: The flip universe; a flip's position is its index
        n_classes: Number of classes the cut-offs were searched over
        warnings: Features dropped during abstraction and why
    """

    source_features: Tuple[str, ...]
    kinds: Dict[str, FeatureKind]
    cutoffs: Dict[str, Cutoff]
    categorical_levels: Dict[str, Tuple[str, ...]]
    flips: Tuple[Flip, ...]
    n_classes: int
    warnings: Tuple[str, ...] = ()
    _index: Dict[Flip, int] = field(init=False, repr=False)
    _feature_of_flip: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {f: i for i, f in enumerate(self.flips)})
        positions = {name: i for i, name in enumerate(self.features)}
        feature_ids = np.array([positions[f.feature] for f in self.flips], dtype=np.int64)
        feature_ids.flags.writeable = False
        object.__setattr__(self, "_feature_of_flip", feature_ids)

    @classmethod
    def build(
        cls,
        source_features: Sequence[str],
        kinds: Mapping[str, FeatureKind],
        cutoffs: Mapping[str, Cutoff],
        categorical_levels: Mapping[str, Sequence[str]],
        n_classes: int,
        warnings: Sequence[str] = (),
    ) -> "AbstractionMap":
        """Assemble a map, deriving the flip universe deterministically.

        Features follow source order; a continuous feature contributes D
        then U, a categorical feature its levels in sorted order.
        """
        flips: List[Flip] = []
        ordered_kinds: Dict[str, FeatureKind] = {}
        for name in source_features:
            if name not in kinds:
                continue
            ordered_kinds[name] = kinds[name]
            if kinds[name] is FeatureKind.CONTINUOUS:
                flips.extend([Flip(name, DOWN), Flip(name, UP)])
            else:
                flips.extend(Flip(name, level) for level in categorical_levels[name])
        return cls(
            source_features=tuple(source_features),
            kinds=ordered_kinds,
            cutoffs={n: cutoffs[n] for n in ordered_kinds if n in cutoffs},
            categorical_levels={
                n: tuple(categorical_levels[n]) for n in ordered_kinds if n in categorical_levels
            },
            flips=tuple(flips),
            n_classes=n_classes,
            warnings=tuple(warnings),
        )

    @property
    def features(self) -> List[str]:
        """Abstracted features, in universe order."""
        return list(self.kinds)

    @property
    def n_flips(self) -> int:
        """Size of the flip universe."""
        return len(self.flips)

    @property
    def feature_of_flip(self) -> np.ndarray:
        """Position in :attr:`features` of each flip's feature."""
        return self._feature_of_flip

    def index_of(self, flip: Flip) -> int:
        """Universe position of a flip."""
        try:
            return self._index[flip]
        except KeyError:
            raise AbstractionError(f"Flip '{flip}' is not in the universe") from None

    def feature_flips(self, feature: str) -> List[int]:
        """Indices of the flips of one feature."""
        if feature not in self.kinds:
            raise AbstractionError(f"Feature '{feature}' is not abstracted")
        return [i for i, f in enumerate(self.flips) if f.feature == feature]

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready description: feature -> cut-off or levels."""
        features: Dict[str, Any] = {}
        for name, kind in self.kinds.items():
            if kind is FeatureKind.CONTINUOUS:
                c = self.cutoffs[name]
                features[name] = {
                    "kind": kind.value,
                    "threshold": c.threshold,
                    "partition": c.partition,
                    "achieved_ba": c.achieved_ba,
                }
            else:
                features[name] = {"kind": kind.value, "levels": list(self.categorical_levels[name])}
        return {
            "source_features": list(self.source_features),
            "feature_order": list(self.kinds),
            "features": features,
            "n_classes": self.n_classes,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AbstractionMap":
        """Rebuild a map from :meth:`to_dict` output."""
        kinds: Dict[str, FeatureKind] = {}
        cutoffs: Dict[str, Cutoff] = {}
        levels: Dict[str, Tuple[str, ...]] = {}
        for name in data["feature_order"]:
            entry = data["features"][name]
            kind = FeatureKind(entry["kind"])
            kinds[name] = kind
            if kind is FeatureKind.CONTINUOUS:
                cutoffs[name] = Cutoff(
                    feature=name,
                    threshold=float(entry["threshold"]),
                    partition=int(entry["partition"]),
                    achieved_ba=float(entry["achieved_ba"]),
                )
            else:
                levels[name] = tuple(str(v) for v in entry["levels"])
        return cls.build(
            source_features=data["source_features"],
            kinds=kinds,
            cutoffs=cutoffs,
            categorical_levels=levels,
            n_classes=int(data["n_classes"]),
            warnings=data.get("warnings", ()),
        )


@dataclass(frozen=True, eq=False)
class FlipTable:
    """Flip encoding of every sample.

    Attributes:
        matrix: Boolean N x |universe| matrix, True where a row carries a flip
        universe: The AbstractionMap that defines the columns
        warnings: Encoding warnings (e.g. unseen categorical levels)
    """

    matrix: np.ndarray
    universe: AbstractionMap
    warnings: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != self.universe.n_flips:
            raise AbstractionError(
                f"Flip matrix shape {self.matrix.shape} does not match "
                f"a universe of {self.universe.n_flips} flips"
            )
        self.matrix.flags.writeable = False

    @property
    def n_rows(self) -> int:
        """Number of encoded samples."""
        return int(self.matrix.shape[0])

    def flips(self, row: int) -> frozenset:
        """Flip indices carried by one row."""
        return frozenset(int(i) for i in np.flatnonzero(self.matrix[row]))

    @property
    def rows(self) -> List[frozenset]:
        """Flip sets of every row, in order."""
        return [self.flips(i) for i in range(self.n_rows)]

    def take(self, rows: Sequence[int]) -> "FlipTable":
        """Table restricted to the given rows."""
        return FlipTable(np.asarray(self.matrix[np.asarray(rows, dtype=np.int64)]), self.universe)


def _abstract_feature(
    name: str,
    kind: FeatureKind,
    column: np.ndarray,
    labels: np.ndarray,
    partitions: List[int],
    n_classes: int,
) -> Tuple[Optional[Any], Optional[str]]:
    observed = ~column_missing(column)
    if not observed.any():
        return None, f"Feature '{name}' dropped: no observed values"
    if kind is FeatureKind.CONTINUOUS:
        try:
            return (
                best_cutoff(
                    column[observed], labels[observed], partitions, n_classes, feature=name
                ),
                None,
            )
        except (DegenerateFeatureError, AbstractionError) as e:
            return None, f"Feature '{name}' dropped: {e}"
    levels = sorted({str(v) for v in column[observed]}, key=level_sort_key)
    if len(levels) < 2:
        return None, f"Feature '{name}' dropped: constant categorical level '{levels[0]}'"
    return tuple(levels), None


def build_abstraction(d: Dataset, n_jobs: Optional[int] = None) -> AbstractionMap:
    """Learn cut-offs and levels for every feature of a labelled dataset.

    Features without observed values, constant features and features seen
    in a single class only are dropped with a warning.
    """
    if d.labels is None:
        raise AbstractionError("Abstraction needs a labelled dataset")
    partitions = enumerate_bipartitions(d.n_classes)
    n_jobs = resolve_threads(n_jobs)
    outcomes = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_abstract_feature)(
            f.name, f.kind, column, d.labels, partitions, d.n_classes
        )
        for f, column in zip(d.schema, d.columns)
    )

    kinds: Dict[str, FeatureKind] = {}
    cutoffs: Dict[str, Cutoff] = {}
    levels: Dict[str, Tuple[str, ...]] = {}
    warnings: List[str] = []
    for f, (result, warning) in zip(d.schema, outcomes):
        if warning is not None:
            logger.warning(warning)
            warnings.append(warning)
            continue
        kinds[f.name] = f.kind
        if f.kind is FeatureKind.CONTINUOUS:
            cutoffs[f.name] = result
        else:
            levels[f.name] = result
    return AbstractionMap.build(
        source_features=d.feature_names,
        kinds=kinds,
        cutoffs=cutoffs,
        categorical_levels=levels,
        n_classes=d.n_classes,
        warnings=warnings,
    )


def encode_dataset(d: Dataset, amap: AbstractionMap) -> FlipTable:
    """Encode every row of a dataset with an existing abstraction.

    Raises:
        SchemaMismatchError: If an abstracted feature is absent from `d`
    """
    names = set(d.feature_names)
    absent = [n for n in amap.features if n not in names]
    if absent:
        raise SchemaMismatchError(f"Dataset lacks features of the abstraction: {absent}")

    matrix = np.zeros((d.n_rows, amap.n_flips), dtype=bool)
    warnings: List[str] = []
    offset = 0
    for name, kind in amap.kinds.items():
        column = d.column(name)
        observed = ~column_missing(column)
        if kind is FeatureKind.CONTINUOUS:
            if column.dtype.kind != "f":
                raise SchemaMismatchError(f"Feature '{name}' must be continuous")
            down = observed.copy()
            down[observed] = column[observed] <= amap.cutoffs[name].threshold
            matrix[:, offset] = down
            matrix[:, offset + 1] = observed & ~down
            offset += 2
        else:
            level_list = amap.categorical_levels[name]
            position = {level: offset + i for i, level in enumerate(level_list)}
            unseen = 0
            for row in np.flatnonzero(observed):
                col = position.get(level_label(column[row]))
                if col is None:
                    unseen += 1
                else:
                    matrix[row, col] = True
            if unseen:
                message = f"Feature '{name}': {unseen} rows with unseen levels skipped"
                logger.warning(message)
                warnings.append(message)
            offset += len(level_list)
    return FlipTable(matrix=matrix, universe=amap, warnings=tuple(warnings))


def abstract(d: Dataset, n_jobs: Optional[int] = None) -> Tuple[AbstractionMap, FlipTable]:
    """Learn the abstraction of a labelled dataset and encode its rows.

    Args:
        d: Labelled dataset
        n_jobs: Worker count for the per-feature search (capped by CACTUS_THREADS)

    Returns:
        (AbstractionMap, FlipTable)
    """
    amap = build_abstraction(d, n_jobs=n_jobs)
    return amap, encode_dataset(d, amap)


def encode(
    sample: Sequence[Any],
    amap: AbstractionMap,
    warnings: Optional[List[str]] = None,
) -> frozenset:
    """Encode one raw row into its flip set.

    Args:
        sample: Cells in the order of the training schema; None/NaN is missing
        amap: Abstraction to apply
        warnings: Optional list receiving unseen-level warnings

    Returns:
        Frozen set of flip indices

    Raises:
        SchemaMismatchError: If the cell count differs from the training schema
    """
    if len(sample) != len(amap.source_features):
        raise SchemaMismatchError(
            f"Sample has {len(sample)} cells, expected {len(amap.source_features)}"
        )
    cells = dict(zip(amap.source_features, sample))
    flips = set()
    for name, kind in amap.kinds.items():
        value = cells[name]
        if value is None or (isinstance(value, float) and math.isnan(value)):
            continue
        if kind is FeatureKind.CONTINUOUS:
            level = DOWN if float(value) <= amap.cutoffs[name].threshold else UP
        else:
            level = level_label(value)
            if level not in amap.categorical_levels[name]:
                message = f"Feature '{name}': unseen level '{level}' skipped"
                logger.warning(message)
                if warnings is not None:
                    warnings.append(message)
                continue
        flips.add(amap.index_of(Flip(name, level)))
    return frozenset(flips)
