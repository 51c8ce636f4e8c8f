"""Evaluation harness: synthetic data, value removal, cross-validation and baselines.

Cross-validation defaults to repeated stratified holdout (``folds`` seeded
80/20-style splits); ``mode="kfold"`` switches to a classical stratified
k-fold partition. Fragmentation is applied to the whole dataset before
splitting, and every model is trained on its training split only.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from sklearn.metrics import recall_score
from sklearn.model_selection import StratifiedKFold, StratifiedShuffleSplit

from cactus.abstraction import MAX_CLASSES
from cactus.cactus import Cactus
from cactus.classifier import classify_dataset
from cactus.errors import ConfigError, StratificationError
from cactus.knowledge_graph import PageRankConfig
from cactus.models import FeatureKind, FeatureSchema, Metric
from cactus.tabular import MAX_CATEGORICAL_LEVELS, Dataset, column_missing
from cactus.utils import derive_seed, read_json, resolve_threads

logger = logging.getLogger(__name__)

# Last-visit stage shares of the reference cohort
DEFAULT_CLASS_PROPORTIONS: Tuple[float, ...] = (0.5546, 0.2685, 0.1076, 0.0315, 0.0378)
DEFAULT_LEVELS: Tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8)
CV_MODES = ("holdout", "kfold")
MAJORITY = "majority"
BEST_FEATURE = "best_feature"
PREFERRED_LEVEL_PROB = 0.6


def _reject_unknown(data: Mapping[str, Any], known: Sequence[str], what: str) -> None:
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"Unknown {what} keys: {sorted(unknown)}")


@dataclass(frozen=True)
class FragmentationSpec:
    """Controlled removal of observed values.

    Attributes:
        removal_fraction: Probability that an observed cell is removed, in [0, 1)
        seed: Seed of the removal pattern
        scope: Cells eligible for removal (only "observed_cells")
    """

    removal_fraction: float = 0.0
    seed: int = 0
    scope: str = "observed_cells"

    def __post_init__(self):
        if not 0.0 <= self.removal_fraction < 1.0:
            raise ConfigError(
                f"removal_fraction must lie in [0, 1), got {self.removal_fraction}"
            )
        if self.scope != "observed_cells":
            raise ConfigError(f"Unsupported fragmentation scope '{self.scope}'")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FragmentationSpec":
        """Parse a fragmentation spec, rejecting unknown keys."""
        _reject_unknown(data, ("removal_fraction", "seed", "scope"), "fragmentation spec")
        return cls(
            removal_fraction=float(data.get("removal_fraction", 0.0)),
            seed=int(data.get("seed", 0)),
            scope=str(data.get("scope", "observed_cells")),
        )

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "FragmentationSpec":
        """Load a fragmentation spec from a JSON file."""
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of a generated dataset.

    Informative features come first within each kind (continuous before
    categorical). Informative continuous feature j has unit variance and
    mean `separation` for classes above j mod (K - 1), 0 otherwise, so a
    set of Up/Down cut-offs can tell every class apart. Informative
    categorical feature j favours level (class + j) mod n_levels.

    Attributes:
        n_rows: Number of rows
        class_proportions: Share of each class, summing to 1
        n_continuous: Number of continuous features
        n_categorical: Number of categorical features
        n_informative: Number of class-dependent features
        base_missing_fraction: Probability that any cell is missing
        seed: Root seed of the generator
        separation: Mean shift of informative continuous features
        n_levels: Levels per categorical feature
        class_names: Optional class labels (default "0".."K-1")
    """

    n_rows: int = 1000
    class_proportions: Tuple[float, ...] = DEFAULT_CLASS_PROPORTIONS
    n_continuous: int = 12
    n_categorical: int = 6
    n_informative: int = 14
    base_missing_fraction: float = 0.0
    seed: int = 0
    separation: float = 3.0
    n_levels: int = 3
    class_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "class_proportions", tuple(float(p) for p in self.class_proportions))
        k = len(self.class_proportions)
        if not 2 <= k <= MAX_CLASSES:
            raise ConfigError(f"Need between 2 and {MAX_CLASSES} classes, got {k}")
        if any(p <= 0 for p in self.class_proportions):
            raise ConfigError("Class proportions must be positive")
        if abs(sum(self.class_proportions) - 1.0) > 1e-9:
            raise ConfigError(
                f"Class proportions must sum to 1, got {sum(self.class_proportions):.12g}"
            )
        if self.n_continuous < 0 or self.n_categorical < 0:
            raise ConfigError("Feature counts must be >= 0")
        if self.n_continuous + self.n_categorical < 1:
            raise ConfigError("A synthetic dataset needs at least one feature")
        if not 0 <= self.n_informative <= self.n_continuous + self.n_categorical:
            raise ConfigError(
                f"n_informative={self.n_informative} exceeds the "
                f"{self.n_continuous + self.n_categorical} features"
            )
        if not 0.0 <= self.base_missing_fraction < 1.0:
            raise ConfigError(
                f"base_missing_fraction must lie in [0, 1), got {self.base_missing_fraction}"
            )
        if not 2 <= self.n_levels <= MAX_CATEGORICAL_LEVELS:
            raise ConfigError(
                f"n_levels must lie in [2, {MAX_CATEGORICAL_LEVELS}], got {self.n_levels}"
            )
        if self.class_names is not None:
            object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))
            if len(self.class_names) != k or len(set(self.class_names)) != k:
                raise ConfigError(f"class_names must be {k} distinct labels")
        if min(self.class_counts()) < 1:
            raise ConfigError(f"n_rows={self.n_rows} leaves a class without rows")

    @property
    def n_classes(self) -> int:
        """Number of classes."""
        return len(self.class_proportions)

    def class_counts(self) -> List[int]:
        """Rows per class by largest-remainder allocation."""
        raw = np.asarray(self.class_proportions) * self.n_rows
        counts = np.floor(raw).astype(np.int64)
        short = self.n_rows - int(counts.sum())
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
        return counts.tolist()

    def continuous_names(self) -> List[str]:
        """Names of the continuous columns."""
        return [f"num_{i:03d}" for i in range(self.n_continuous)]

    def categorical_names(self) -> List[str]:
        """Names of the categorical columns."""
        return [f"cat_{i:03d}" for i in range(self.n_categorical)]

    def informative_names(self) -> List[str]:
        """Names of the columns that carry class signal."""
        n_cont = min(self.n_informative, self.n_continuous)
        n_cat = self.n_informative - n_cont
        return self.continuous_names()[:n_cont] + self.categorical_names()[:n_cat]

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SyntheticSpec":
        """Parse a synthetic dataset spec, rejecting unknown keys."""
        _reject_unknown(data, [f for f in cls.__dataclass_fields__], "synthetic spec")
        kwargs = dict(data)
        if "class_proportions" in kwargs:
            kwargs["class_proportions"] = tuple(kwargs["class_proportions"])
        if kwargs.get("class_names") is not None:
            kwargs["class_names"] = tuple(kwargs["class_names"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SyntheticSpec":
        """Load a synthetic dataset spec from a JSON file."""
        return cls.from_dict(read_json(path))


@dataclass(frozen=True)
class EvalResult:
    """Balanced accuracy of one method at one fragmentation level, per fold."""

    metric: str
    level: float
    fold_scores: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "fold_scores", tuple(float(s) for s in self.fold_scores))
        if any(not 0.0 <= s <= 1.0 for s in self.fold_scores):
            raise ValueError(f"Balanced accuracy outside [0, 1] in {self.fold_scores}")

    @property
    def n_folds(self) -> int:
        """Number of folds scored."""
        return len(self.fold_scores)

    @property
    def mean(self) -> float:
        """Mean balanced accuracy over folds."""
        return float(np.mean(self.fold_scores))

    @property
    def std(self) -> float:
        """Standard deviation of balanced accuracy over folds."""
        return float(np.std(self.fold_scores))

    @property
    def formatted(self) -> str:
        """Mean and standard deviation, e.g. "0.812 ± 0.031"."""
        return f"{self.mean:.3f} ± {self.std:.3f}"


@dataclass(frozen=True)
class StudyResult:
    """Grid of EvalResults ordered by (level, method)."""

    results: Tuple[EvalResult, ...]
    n_classes: int
    methods: Tuple[str, ...] = field(default_factory=tuple)

    def get(self, metric: str, level: float) -> EvalResult:
        """Result of one metric at one fragmentation level."""
        for r in self.results:
            if r.metric == metric and math.isclose(r.level, level):
                return r
        raise KeyError((metric, level))

    def to_frame(self) -> pd.DataFrame:
        """One row per (level, method, fold)."""
        rows = [
            (r.level, r.metric, i, s)
            for r in self.results
            for i, s in enumerate(r.fold_scores)
        ]
        return pd.DataFrame(rows, columns=["level", "metric", "fold", "balanced_accuracy"])

    def summary_frame(self) -> pd.DataFrame:
        """One row per (level, metric) result."""
        rows = [(r.level, r.metric, r.mean, r.std, r.formatted) for r in self.results]
        return pd.DataFrame(rows, columns=["level", "metric", "mean", "std", "formatted"])

    def table(self) -> pd.DataFrame:
        """Levels as rows, methods as columns, "mean ± std" cells."""
        summary = self.summary_frame()
        table = summary.pivot(index="level", columns="metric", values="formatted")
        order = list(self.methods) or sorted(table.columns)
        return table[order].reset_index()

    def write(self, out_dir: Union[str, Path]) -> List[Path]:
        """Write study.csv, study_summary.csv and study.svg.

        study.csv holds the per-fold table, a blank line, then the
        mean/std block per (level, method).
        """
        from cactus.plots import plot_study

        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        study_path = out_dir / "study.csv"
        with open(study_path, "w", encoding="utf-8", newline="") as handle:
            self.to_frame().to_csv(handle, index=False, lineterminator="\n")
            handle.write("\n")
            self.summary_frame().to_csv(handle, index=False, lineterminator="\n")
        summary_path = out_dir / "study_summary.csv"
        self.table().to_csv(summary_path, index=False, lineterminator="\n")
        svg_path = plot_study(
            self.summary_frame(), out_dir / "study.svg", chance_line=1.0 / self.n_classes
        )
        return [study_path, summary_path, svg_path]


def balanced_accuracy(predicted: Sequence[int], actual: Sequence[int], n_classes: int) -> float:
    """Mean per-class recall over all K classes.

    Raises:
        ValueError: If inputs are misaligned or empty
        StratificationError: If a class is absent from `actual`
    """
    predicted = np.asarray(predicted, dtype=np.int64)
    actual = np.asarray(actual, dtype=np.int64)
    if predicted.shape != actual.shape or actual.size == 0:
        raise ValueError("predicted and actual must be aligned and non-empty")
    absent = sorted(set(range(n_classes)) - set(actual.tolist()))
    if absent:
        raise StratificationError(f"Classes {absent} absent from the actual labels")
    return float(
        recall_score(actual, predicted, labels=list(range(n_classes)), average="macro", zero_division=0)
    )


def observed_balanced_accuracy(
    predicted: Sequence[int], actual: Sequence[int], n_classes: int
) -> float:
    """Mean recall over the classes present in `actual`; absent classes are logged."""
    predicted = np.asarray(predicted, dtype=np.int64)
    actual = np.asarray(actual, dtype=np.int64)
    present = sorted(set(actual.tolist()))
    if len(present) < n_classes:
        logger.warning(
            "Labels lack classes %s; recall averaged over the present ones",
            sorted(set(range(n_classes)) - set(present)),
        )
    return float(recall_score(actual, predicted, labels=present, average="macro", zero_division=0))


def fragment(d: Dataset, spec: FragmentationSpec) -> Dataset:
    """Remove each observed cell independently with probability `removal_fraction`.

    One uniform draw per cell, in column order, decides removal, so for a
    fixed seed the cells removed at a lower fraction are also removed at
    every higher one. Labels are never touched.
    """
    if spec.removal_fraction == 0.0:
        return d
    rng = np.random.default_rng(derive_seed(spec.seed, "fragment"))
    columns: List[np.ndarray] = []
    removed = 0
    for column in d.columns:
        draws = rng.random(d.n_rows)
        remove = ~column_missing(column) & (draws < spec.removal_fraction)
        removed += int(remove.sum())
        updated = column.copy()
        updated[remove] = np.nan if column.dtype.kind == "f" else None
        columns.append(updated)
    logger.debug("Fragmentation %.2f removed %d cells", spec.removal_fraction, removed)
    return d.with_columns(columns)


def synthesize(spec: SyntheticSpec) -> Dataset:
    """Generate a labelled mixed-type dataset.

    Labels follow the class proportions exactly (largest remainder) in a
    seeded random order; continuous values are rounded to 6 decimals.
    """
    rng = np.random.default_rng(derive_seed(spec.seed, "synthesize"))
    n, k = spec.n_rows, spec.n_classes
    labels = rng.permutation(np.repeat(np.arange(k), spec.class_counts()))
    informative = set(spec.informative_names())

    schema: List[FeatureSchema] = []
    columns: List[np.ndarray] = []
    for j, name in enumerate(spec.continuous_names()):
        values = rng.standard_normal(n)
        if name in informative:
            values = values + np.where(labels > j % (k - 1), spec.separation, 0.0)
        values = np.round(values, 6)
        values[rng.random(n) < spec.base_missing_fraction] = np.nan
        schema.append(FeatureSchema(name, FeatureKind.CONTINUOUS, True))
        columns.append(values)

    n_cont_informative = min(spec.n_informative, spec.n_continuous)
    for j, name in enumerate(spec.categorical_names()):
        noise = rng.integers(0, spec.n_levels, n)
        if name in informative:
            preferred = (labels + j) % spec.n_levels
            keep = rng.random(n) < PREFERRED_LEVEL_PROB
            levels = np.where(keep, preferred, noise)
        else:
            levels = noise
        column = np.array([str(v) for v in levels], dtype=object)
        column[rng.random(n) < spec.base_missing_fraction] = None
        schema.append(FeatureSchema(name, FeatureKind.CATEGORICAL, True))
        columns.append(column)

    logger.info(
        "Synthesized %d rows, %d classes, %d features (%d continuous informative, %d categorical informative)",
        n,
        k,
        len(schema),
        n_cont_informative,
        spec.n_informative - n_cont_informative,
    )
    return Dataset(
        schema=tuple(schema),
        columns=tuple(columns),
        labels=labels.astype(np.int64),
        class_names=spec.class_names or tuple(str(c) for c in range(k)),
    )


def _validate_cv(folds: int, holdout: float, mode: str) -> None:
    if folds < 2:
        raise ConfigError(f"folds must be >= 2, got {folds}")
    if not 0.0 < holdout < 1.0:
        raise ConfigError(f"holdout must lie in (0, 1), got {holdout}")
    if mode not in CV_MODES:
        raise ConfigError(f"mode must be one of {CV_MODES}, got '{mode}'")


def stratified_splits(
    labels: np.ndarray,
    n_classes: int,
    folds: int = 10,
    holdout: float = 0.2,
    seed: int = 0,
    mode: str = "holdout",
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Seeded stratified (train, test) index pairs.

    Raises:
        StratificationError: If the labels cannot be split, or a training
            split misses a class
    """
    _validate_cv(folds, holdout, mode)
    random_state = derive_seed(seed, "split", mode)
    if mode == "holdout":
        splitter = StratifiedShuffleSplit(
            n_splits=folds, test_size=holdout, random_state=random_state
        )
    else:
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=random_state)
    try:
        splits = list(splitter.split(np.zeros(len(labels)), labels))
    except ValueError as e:
        raise StratificationError(f"Cannot stratify {len(labels)} rows: {e}") from e
    for i, (train, _) in enumerate(splits):
        counts = np.bincount(labels[train], minlength=n_classes)
        absent = np.flatnonzero(counts == 0).tolist()
        if absent:
            raise StratificationError(f"Fold {i}: training split lacks classes {absent}")
    return splits


def _score_fold(
    data: Dataset,
    train: np.ndarray,
    test: np.ndarray,
    metrics: Sequence[Metric],
    pagerank: PageRankConfig,
    normalization: str,
) -> Dict[Metric, float]:
    model = Cactus.fit(data.take(train), pagerank, normalization, n_jobs=1)
    test_d = data.take(test)
    ft = model.encode(test_d)
    scores: Dict[Metric, float] = {}
    for metric in metrics:
        predicted = np.array([r.label for r in classify_dataset(ft, model.profile, metric)])
        scores[metric] = observed_balanced_accuracy(predicted, test_d.labels, data.n_classes)
    return scores


def _cross_validate_metrics(
    data: Dataset,
    metrics: Sequence[Metric],
    splits: Sequence[Tuple[np.ndarray, np.ndarray]],
    pagerank: PageRankConfig,
    normalization: str,
    n_jobs: Optional[int],
) -> Dict[Metric, List[float]]:
    per_fold = Parallel(n_jobs=resolve_threads(n_jobs), prefer="threads")(
        delayed(_score_fold)(data, train, test, metrics, pagerank, normalization)
        for train, test in splits
    )
    return {m: [fold[m] for fold in per_fold] for m in metrics}


def cross_validate(
    d: Dataset,
    metric: Union[str, Metric],
    folds: int = 10,
    holdout: float = 0.2,
    frag: Optional[FragmentationSpec] = None,
    *,
    seed: int = 0,
    mode: str = "holdout",
    pagerank: PageRankConfig = PageRankConfig(),
    normalization: str = "minmax",
    n_jobs: Optional[int] = None,
) -> EvalResult:
    """Cross-validated balanced accuracy of CACTUS under one metric.

    Args:
        d: Labelled dataset
        metric: CPB, CDG or CPR
        folds: Number of splits (>= 2)
        holdout: Test share per split in holdout mode
        frag: Value removal applied before splitting (default none)
        seed: Root seed of the split generator
        mode: "holdout" (repeated stratified split) or "kfold"
        pagerank: PageRank parameters
        normalization: Confidence scaling
        n_jobs: Worker count over folds (capped by CACTUS_THREADS)

    Returns:
        EvalResult with one score per fold

    Raises:
        StratificationError: If a training split misses a class
    """
    metric = Metric.parse(metric)
    frag = frag or FragmentationSpec(0.0, seed)
    data = fragment(d, frag)
    splits = stratified_splits(data.labels, data.n_classes, folds, holdout, seed, mode)
    scores = _cross_validate_metrics(data, [metric], splits, pagerank, normalization, n_jobs)
    result = EvalResult(metric.value, frag.removal_fraction, tuple(scores[metric]))
    logger.info("%s at level %.2f: %s", metric.value, frag.removal_fraction, result.formatted)
    return result


def _majority_scores(
    data: Dataset, splits: Sequence[Tuple[np.ndarray, np.ndarray]]
) -> List[float]:
    scores = []
    for train, test in splits:
        majority = int(np.argmax(np.bincount(data.labels[train], minlength=data.n_classes)))
        predicted = np.full(len(test), majority)
        scores.append(observed_balanced_accuracy(predicted, data.labels[test], data.n_classes))
    return scores


def baseline_majority(
    d: Dataset,
    folds: int = 10,
    holdout: float = 0.2,
    frag: Optional[FragmentationSpec] = None,
    *,
    seed: int = 0,
    mode: str = "holdout",
) -> EvalResult:
    """Balanced accuracy of always predicting the training-split majority class."""
    frag = frag or FragmentationSpec(0.0, seed)
    splits = stratified_splits(d.labels, d.n_classes, folds, holdout, seed, mode)
    return EvalResult(MAJORITY, frag.removal_fraction, tuple(_majority_scores(d, splits)))


def _best_feature_score(
    data: Dataset,
    train: np.ndarray,
    test: np.ndarray,
    pagerank: PageRankConfig,
    normalization: str,
) -> float:
    train_d = data.take(train)
    best: Optional[Tuple[float, str, Cactus]] = None
    for name in train_d.feature_names:
        if train_d.observed_count(name) == 0:
            continue
        model = Cactus.fit(train_d.select_features([name]), pagerank, normalization, n_jobs=1)
        score = observed_balanced_accuracy(
            model.predict(train_d, Metric.CPB), train_d.labels, data.n_classes
        )
        if best is None or score > best[0]:
            best = (score, name, model)
    test_d = data.take(test)
    if best is None:
        predicted = np.zeros(len(test), dtype=np.int64)
    else:
        logger.debug("Best single feature: %s (training BA %.3f)", best[1], best[0])
        predicted = best[2].predict(test_d, Metric.CPB)
    return observed_balanced_accuracy(predicted, test_d.labels, data.n_classes)


def baseline_best_feature(
    d: Dataset,
    folds: int = 10,
    holdout: float = 0.2,
    frag: Optional[FragmentationSpec] = None,
    *,
    seed: int = 0,
    mode: str = "holdout",
    pagerank: PageRankConfig = PageRankConfig(),
    normalization: str = "minmax",
    n_jobs: Optional[int] = None,
) -> EvalResult:
    """Balanced accuracy of CPB restricted to the single best training feature.

    Per fold, every feature is trained alone on the training split; the one
    with the highest training balanced accuracy (ties by schema order) is
    scored on the test split.
    """
    frag = frag or FragmentationSpec(0.0, seed)
    data = fragment(d, frag)
    splits = stratified_splits(data.labels, data.n_classes, folds, holdout, seed, mode)
    scores = Parallel(n_jobs=resolve_threads(n_jobs), prefer="threads")(
        delayed(_best_feature_score)(data, train, test, pagerank, normalization)
        for train, test in splits
    )
    return EvalResult(BEST_FEATURE, frag.removal_fraction, tuple(scores))


def run_fragmentation_study(
    d: Dataset,
    levels: Sequence[float] = DEFAULT_LEVELS,
    metrics: Optional[Sequence[Union[str, Metric]]] = None,
    folds: int = 10,
    holdout: float = 0.2,
    seed: int = 0,
    *,
    mode: str = "holdout",
    pagerank: PageRankConfig = PageRankConfig(),
    normalization: str = "minmax",
    feature_baseline: bool = False,
    n_jobs: Optional[int] = None,
) -> StudyResult:
    """Cross-validate every (level, metric) cell plus the baselines.

    All levels share one removal seed and one set of splits, so higher
    levels remove a superset of the cells removed at lower ones and
    methods are compared on identical folds.

    Returns:
        StudyResult ordered by level, then CPB, CDG, CPR, majority
        (and best_feature when requested)
    """
    metric_list = Metric.parse_list(metrics)
    levels = [float(level) for level in levels]
    if not levels:
        raise ConfigError("A study needs at least one fragmentation level")
    for level in levels:
        FragmentationSpec(level, seed)
    splits = stratified_splits(d.labels, d.n_classes, folds, holdout, seed, mode)

    methods = [m.value for m in metric_list] + [MAJORITY]
    if feature_baseline:
        methods.append(BEST_FEATURE)
    results: List[EvalResult] = []
    for level in levels:
        frag = FragmentationSpec(level, seed)
        data = fragment(d, frag)
        scores = _cross_validate_metrics(data, metric_list, splits, pagerank, normalization, n_jobs)
        for metric in metric_list:
            results.append(EvalResult(metric.value, level, tuple(scores[metric])))
        results.append(EvalResult(MAJORITY, level, tuple(_majority_scores(data, splits))))
        if feature_baseline:
            best = Parallel(n_jobs=resolve_threads(n_jobs), prefer="threads")(
                delayed(_best_feature_score)(data, train, test, pagerank, normalization)
                for train, test in splits
            )
            results.append(EvalResult(BEST_FEATURE, level, tuple(best)))
        logger.info(
            "Level %.2f: %s",
            level,
            ", ".join(f"{r.metric} {r.formatted}" for r in results if r.level == level),
        )
    return StudyResult(tuple(results), d.n_classes, tuple(methods))
