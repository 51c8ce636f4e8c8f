"""Interpretability artifacts: feature ranks and confidence analysis.

The rank of a flip is the mean absolute difference of its significance
over unordered class pairs; a feature's rank is the mean over its flips.
The confidence analysis bins samples by confidence and relates each bin
to its balanced accuracy and population.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from sklearn.metrics import balanced_accuracy_score

from cactus.classifier import NORMALIZATIONS, ClassificationResult, SignificanceProfile
from cactus.errors import ConfigError
from cactus.models import Metric
from cactus.utils import write_json

logger = logging.getLogger(__name__)

DEFAULT_COVERAGE_LEVELS: Tuple[int, ...] = (90, 80, 70, 60, 50)
COVERAGE_SIDES = ("high", "low")


@dataclass(frozen=True)
class ConfidenceConfig:
    """Confidence scaling and analysis settings.

    Attributes:
        normalization: "minmax" or "max" scaling of raw confidence
        bin_width: Width of the confidence bins on [0, 100]
        coverage_levels: Population percentages to find thresholds for
        coverage_side: "high" covers samples with confidence >= c, "low" those <= c
    """

    normalization: str = "minmax"
    bin_width: float = 10.0
    coverage_levels: Tuple[int, ...] = DEFAULT_COVERAGE_LEVELS
    coverage_side: str = "high"

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
        if not 0 < self.bin_width <= 100:
            raise ConfigError(f"bin_width must lie in (0, 100], got {self.bin_width}")
        if any(not 0 < p <= 100 for p in self.coverage_levels):
            raise ConfigError(f"coverage levels must lie in (0, 100], got {self.coverage_levels}")
        if self.coverage_side not in COVERAGE_SIDES:
            raise ConfigError(f"coverage_side must be one of {COVERAGE_SIDES}")
        object.__setattr__(self, "coverage_levels", tuple(int(p) for p in self.coverage_levels))


@dataclass(frozen=True)
class FlipRank:
    """Rank of one flip, with its raw and presentation-normalized significance per class."""

    flip: str
    level: str
    flip_rank: float
    sigma: Tuple[float, ...]
    normalized: Tuple[float, ...]


@dataclass(frozen=True)
class FeatureRank:
    feature: str
    avg_rank: float
    flips: Tuple[FlipRank, ...]


@dataclass(frozen=True)
class RankReport:
    """Features ordered by descending average rank (ties by name)."""

    metric: Metric
    class_names: Tuple[str, ...]
    features: Tuple[FeatureRank, ...]

    @property
    def feature_names(self) -> List[str]:
        """Ranked feature names, best first."""
        return [f.feature for f in self.features]

    def avg_ranks(self) -> Dict[str, float]:
        """Average rank per ranked feature."""
        return {f.feature: f.avg_rank for f in self.features}

    def to_dict(self) -> dict:
        """JSON-ready report."""
        return {
            "metric": self.metric.value,
            "class_names": list(self.class_names),
            "features": [
                {
                    "feature": f.feature,
                    "avg_rank": f.avg_rank,
                    "flips": [
                        {
                            "flip": r.flip,
                            "flip_rank": r.flip_rank,
                            "sigma": list(r.sigma),
                            "normalized_sigma": list(r.normalized),
                        }
                        for r in f.flips
                    ],
                }
                for f in self.features
            ],
        }

    def to_frame(self) -> pd.DataFrame:
        """Long table: one row per (feature, flip, class)."""
        columns = ["feature", "flip", "class", "sigma", "normalized_sigma", "flip_rank", "avg_rank"]
        rows = [
            (f.feature, r.flip, name, r.sigma[c], r.normalized[c], r.flip_rank, f.avg_rank)
            for f in self.features
            for r in f.flips
            for c, name in enumerate(self.class_names)
        ]
        return pd.DataFrame(rows, columns=columns)


@dataclass(frozen=True)
class CoverageThreshold:
    """Confidence threshold covering a share of the population."""

    coverage: int
    threshold: float
    achieved_fraction: float
    balanced_accuracy: float


@dataclass(frozen=True, eq=False)
class ConfidenceReport:
    """Binned relation between confidence, balanced accuracy and population.

    Cumulative entries at edge j cover every sample in bins 0..j.
    `cum_weighted_ba` is the balanced accuracy of that pooled population;
    `cum_bin_mean_ba` is the population-weighted mean of the per-bin values.
    """

    metric: Optional[Metric]
    bin_edges: np.ndarray
    population: np.ndarray
    balanced_accuracy: np.ndarray
    cum_population_fraction: np.ndarray
    cum_weighted_ba: np.ndarray
    cum_bin_mean_ba: np.ndarray
    coverage: Tuple[CoverageThreshold, ...]
    chance_line: float
    cohort_ba: float
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_bins(self) -> int:
        """Number of confidence bins."""
        return int(self.population.shape[0])

    def bins_frame(self) -> pd.DataFrame:
        """Per-bin population and accuracy."""
        return pd.DataFrame(
            {
                "bin_lo": self.bin_edges[:-1],
                "bin_hi": self.bin_edges[1:],
                "population": self.population,
                "balanced_accuracy": self.balanced_accuracy,
                "cum_population_fraction": self.cum_population_fraction,
                "cum_weighted_ba": self.cum_weighted_ba,
                "cum_bin_mean_ba": self.cum_bin_mean_ba,
            }
        )

    def coverage_frame(self) -> pd.DataFrame:
        """Coverage and accuracy per confidence cut."""
        return pd.DataFrame(
            [
                (c.coverage, c.threshold, c.achieved_fraction, c.balanced_accuracy)
                for c in self.coverage
            ],
            columns=["coverage", "threshold", "achieved_fraction", "balanced_accuracy"],
        )


def flip_ranks(profile: SignificanceProfile, metric: Metric) -> np.ndarray:
    """Rank of every flip of the universe under one metric."""
    sigma = profile.for_metric(metric)
    n_classes = sigma.shape[0]
    if n_classes < 2:
        raise ConfigError("Ranks need at least 2 classes")
    total = np.zeros(sigma.shape[1])
    for i, j in combinations(range(n_classes), 2):
        total += np.abs(sigma[i] - sigma[j])
    return total / math.comb(n_classes, 2)


def flip_rank(profile: SignificanceProfile, metric: Metric, flip: int) -> float:
    """Mean absolute significance difference of one flip over unordered class pairs."""
    if not 0 <= flip < profile.n_flips:
        raise ConfigError(f"Unknown flip index {flip}")
    return float(flip_ranks(profile, metric)[flip])


def feature_rank(profile: SignificanceProfile, metric: Metric, feature: str) -> float:
    """Average rank over the flips of one feature."""
    flips = profile.abstraction.feature_flips(feature)
    return float(flip_ranks(profile, metric)[flips].mean())


def rank_report(
    profile: SignificanceProfile,
    metric: Metric,
    top_k: Optional[int] = 9,
    class_names: Optional[Sequence[str]] = None,
) -> RankReport:
    """Features with the `top_k` highest average ranks.

    Ranks use the raw significances; the per-class normalization that
    makes a feature's flips sum to 1 is applied for presentation only.

    Args:
        profile: Trained significance profile
        metric: Metric to rank under
        top_k: Number of features to keep (None for all)
        class_names: Class labels (defaults to "0".."K-1")

    Raises:
        ConfigError: If top_k exceeds the number of features
    """
    metric = Metric.parse(metric)
    amap = profile.abstraction
    features = amap.features
    if top_k is None:
        top_k = len(features)
    if not 0 <= top_k <= len(features):
        raise ConfigError(f"top_k={top_k} outside [0, {len(features)}]")
    class_names = tuple(class_names or (str(c) for c in range(profile.n_classes)))

    ranks = flip_ranks(profile, metric)
    sigma = profile.for_metric(metric)
    flips_of: Dict[str, List[int]] = {name: [] for name in features}
    for i, flip in enumerate(amap.flips):
        flips_of[flip.feature].append(i)

    averages = {name: float(ranks[idx].mean()) for name, idx in flips_of.items()}
    ordered = sorted(features, key=lambda n: (-averages[n], n))[:top_k]

    report: List[FeatureRank] = []
    for name in ordered:
        idx = flips_of[name]
        block = sigma[:, idx]
        totals = block.sum(axis=1, keepdims=True)
        normalized = np.divide(block, totals, out=np.zeros_like(block), where=totals > 0)
        report.append(
            FeatureRank(
                feature=name,
                avg_rank=averages[name],
                flips=tuple(
                    FlipRank(
                        flip=amap.flips[i].name,
                        level=amap.flips[i].level,
                        flip_rank=float(ranks[i]),
                        sigma=tuple(float(v) for v in block[:, k]),
                        normalized=tuple(float(v) for v in normalized[:, k]),
                    )
                    for k, i in enumerate(idx)
                ),
            )
        )
    return RankReport(metric=metric, class_names=class_names, features=tuple(report))


def _pooled_ba(actual: np.ndarray, predicted: np.ndarray) -> float:
    if actual.size == 0:
        return math.nan
    with warnings.catch_warnings():
        # classes predicted but absent from `actual` are excluded from the mean
        warnings.simplefilter("ignore")
        return float(balanced_accuracy_score(actual, predicted))


def _coverage_threshold(confidence: np.ndarray, p: int, side: str) -> Tuple[float, np.ndarray]:
    candidates = np.unique(confidence)
    if side == "high":
        fractions = np.array([(confidence >= c).mean() for c in candidates])
        ok = np.flatnonzero(fractions <= p / 100.0)
        chosen = candidates[ok[0]] if ok.size else candidates[-1]
        return float(chosen), confidence >= chosen
    fractions = np.array([(confidence <= c).mean() for c in candidates])
    ok = np.flatnonzero(fractions <= p / 100.0)
    chosen = candidates[ok[-1]] if ok.size else candidates[0]
    return float(chosen), confidence <= chosen


def confidence_analysis(
    results: Sequence[ClassificationResult],
    labels: Sequence[int],
    n_classes: Optional[int] = None,
    config: ConfidenceConfig = ConfidenceConfig(),
    metric: Optional[Metric] = None,
) -> ConfidenceReport:
    """Relate confidence to balanced accuracy and population.

    On the "high" side the coverage threshold for p% is the minimum
    confidence c whose covered population (confidence >= c) is at most p%
    of the cohort; when no observed confidence qualifies, the highest
    observed confidence is used. The "low" side mirrors this from below.

    Args:
        results: Classification results, degenerate samples included
        labels: True class index per result
        n_classes: Number of classes (defaults to the length of the scores)
        config: Bin width, coverage levels and side
        metric: Metric the results were produced with, for labelling

    Raises:
        ConfigError: On an empty cohort or misaligned inputs
    """
    if not results:
        raise ConfigError("Confidence analysis needs a non-empty cohort")
    if len(results) != len(labels):
        raise ConfigError(f"{len(results)} results but {len(labels)} labels")
    bin_width = config.bin_width

    actual = np.asarray(labels, dtype=np.int64)
    predicted = np.array([r.label for r in results], dtype=np.int64)
    confidence = np.array([r.confidence for r in results], dtype=np.float64)
    n_classes = n_classes or len(results[0].scores)
    n_bins = int(math.ceil(100.0 / bin_width))
    edges = np.minimum(np.arange(n_bins + 1) * bin_width, 100.0)
    bin_of = np.minimum((confidence // bin_width).astype(np.int64), n_bins - 1)

    population = np.bincount(bin_of, minlength=n_bins)
    per_bin = np.full(n_bins, math.nan)
    cum_pooled = np.full(n_bins, math.nan)
    cum_mean = np.full(n_bins, math.nan)
    notes: List[str] = []
    weighted_sum = 0.0
    for b in range(n_bins):
        inside = bin_of == b
        if population[b]:
            per_bin[b] = _pooled_ba(actual[inside], predicted[inside])
            weighted_sum += population[b] * per_bin[b]
            absent = sorted(set(range(n_classes)) - set(actual[inside].tolist()))
            if absent:
                notes.append(
                    f"bin [{edges[b]:g}, {edges[b + 1]:g}): classes {absent} absent, "
                    "excluded from the recall mean"
                )
        covered = bin_of <= b
        if covered.any():
            cum_pooled[b] = _pooled_ba(actual[covered], predicted[covered])
            cum_mean[b] = weighted_sum / population[: b + 1].sum()
    cum_population = np.cumsum(population) / float(len(results))
    if notes:
        logger.warning("%d confidence bins miss at least one class", len(notes))

    coverage: List[CoverageThreshold] = []
    for p in config.coverage_levels:
        chosen, covered = _coverage_threshold(confidence, p, config.coverage_side)
        coverage.append(
            CoverageThreshold(
                coverage=int(p),
                threshold=float(chosen),
                achieved_fraction=float(covered.mean()),
                balanced_accuracy=_pooled_ba(actual[covered], predicted[covered]),
            )
        )

    return ConfidenceReport(
        metric=metric,
        bin_edges=edges,
        population=population,
        balanced_accuracy=per_bin,
        cum_population_fraction=cum_population,
        cum_weighted_ba=cum_pooled,
        cum_bin_mean_ba=cum_mean,
        coverage=tuple(coverage),
        chance_line=1.0 / n_classes,
        cohort_ba=_pooled_ba(actual, predicted),
        notes=tuple(notes),
    )


def select_metric_by_coverage(reports: Mapping[Metric, ConfidenceReport]) -> Metric:
    """Metric with the highest mean balanced accuracy over its coverage thresholds.

    Undefined values count as 0; ties keep the CPB, CDG, CPR order.
    """
    if not reports:
        raise ConfigError("No confidence reports to choose from")

    def _mean(report: ConfidenceReport) -> float:
        values = [0.0 if math.isnan(c.balanced_accuracy) else c.balanced_accuracy for c in report.coverage]
        return sum(values) / len(values) if values else 0.0

    ordered = [m for m in Metric if m in reports]
    return max(ordered, key=lambda m: (_mean(reports[m]), -ordered.index(m)))


def emit_reports(
    rank_reports: Sequence[RankReport],
    confidence_reports: Mapping[Metric, ConfidenceReport],
    out_dir: Union[str, Path],
) -> List[Path]:
    """Write rank and confidence artifacts for every metric.

    Files per metric: ranks_<m>.json, ranks_<m>.csv, ranks_<m>.svg,
    confidence_<m>.csv (bin table, blank line, coverage table) and
    confidence_<m>.svg.

    Raises:
        OSError: With the failing path when a file cannot be written
    """
    from cactus import plots

    out_dir = Path(out_dir)
    written: List[Path] = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for report in rank_reports:
            m = report.metric.value
            written.append(write_json(out_dir / f"ranks_{m}.json", report.to_dict()))
            csv_path = out_dir / f"ranks_{m}.csv"
            report.to_frame().to_csv(csv_path, index=False, lineterminator="\n")
            written.append(csv_path)
            written.append(plots.plot_rank_report(report, out_dir / f"ranks_{m}.svg"))
        for metric, report in confidence_reports.items():
            m = Metric.parse(metric).value
            csv_path = out_dir / f"confidence_{m}.csv"
            with open(csv_path, "w", encoding="utf-8", newline="") as handle:
                report.bins_frame().to_csv(handle, index=False, lineterminator="\n")
                handle.write("\n")
                report.coverage_frame().to_csv(handle, index=False, lineterminator="\n")
            written.append(csv_path)
            written.append(plots.plot_confidence_report(report, out_dir / f"confidence_{m}.svg"))
    except OSError as e:
        raise OSError(f"Cannot write reports to {out_dir}: {e}") from e
    logger.info("Wrote %d report files to %s", len(written), out_dir)
    return written
