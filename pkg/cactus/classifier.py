"""Flip significance, class scoring and confidence.

A sample's cost for class c is the sum of the significances of its flips
in c; the class with the highest cost wins. Confidence is the mean
absolute gap between the winning cost and every other cost, normalized to
[0, 100] against the training cohort.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from cactus.abstraction import AbstractionMap, FlipTable
from cactus.errors import AbstractionError, ConfigError, ModelFormatError
from cactus.knowledge_graph import CentralityTable, ClassGraph
from cactus.models import Metric

logger = logging.getLogger(__name__)

NORMALIZATIONS = ("minmax", "max")


@dataclass(frozen=True, eq=False)
class SignificanceProfile:
    """The trained model: sigma(metric, class, flip).

    Attributes:
        sigma: Array of shape (3, K, |universe|), indexed by Metric.index
        abstraction: Flip universe the columns refer to
        bounds: Per metric, (min, max) raw confidence over the training cohort
        normalization: "minmax" or "max" confidence scaling
    """

    sigma: np.ndarray
    abstraction: AbstractionMap
    bounds: Dict[Metric, Tuple[float, float]] = field(default_factory=dict)
    normalization: str = "minmax"
    _sigma_t: Tuple[np.ndarray, ...] = field(init=False, repr=False)

    def __post_init__(self):
        if self.normalization not in NORMALIZATIONS:
            raise ConfigError(
                f"normalization must be one of {NORMALIZATIONS}, got '{self.normalization}'"
            )
        if self.sigma.ndim != 3 or self.sigma.shape[0] != len(Metric):
            raise ModelFormatError(f"sigma must have shape (3, K, U), got {self.sigma.shape}")
        if self.sigma.shape[2] != self.abstraction.n_flips:
            raise ModelFormatError("sigma does not match the flip universe")
        self.sigma.flags.writeable = False
        object.__setattr__(
            self,
            "_sigma_t",
            tuple(np.ascontiguousarray(self.sigma[m.index].T) for m in Metric),
        )

    @property
    def n_classes(self) -> int:
        """Number of classes K."""
        return int(self.sigma.shape[1])

    @property
    def n_flips(self) -> int:
        """Size of the flip universe."""
        return int(self.sigma.shape[2])

    def for_metric(self, metric: Metric) -> np.ndarray:
        """K x |universe| significances of one metric."""
        return self.sigma[Metric.parse(metric).index]

    def with_bounds(self, bounds: Mapping[Metric, Tuple[float, float]]) -> "SignificanceProfile":
        """Copy of the profile with new confidence bounds."""
        return SignificanceProfile(self.sigma, self.abstraction, dict(bounds), self.normalization)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready sigma tensor, bounds and normalization."""
        return {
            "normalization": self.normalization,
            "sigma": {m.value: self.sigma[m.index] for m in Metric},
            "bounds": {m.value: list(b) for m, b in self.bounds.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], abstraction: AbstractionMap) -> "SignificanceProfile":
        """Rebuild a profile over `abstraction` from :meth:`to_dict` output."""
        try:
            sigma = np.stack(
                [np.asarray(data["sigma"][m.value], dtype=np.float64) for m in Metric]
            )
            bounds = {
                Metric.parse(k): (float(v[0]), float(v[1])) for k, v in data["bounds"].items()
            }
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed significance profile: {e}") from e
        return cls(sigma, abstraction, bounds, data.get("normalization", "minmax"))


@dataclass(frozen=True, eq=False)
class ClassScores:
    """Per-class cost of one sample under one metric."""

    costs: np.ndarray
    metric: Metric

    def __len__(self) -> int:
        """Number of classes scored."""
        return int(self.costs.shape[0])


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    """Outcome of classifying one sample."""

    label: int
    scores: ClassScores
    raw_confidence: float
    confidence: float
    degenerate: bool = False
    warnings: Tuple[str, ...] = ()


def _flip_indices(sample_flips: Iterable[int], n_flips: int) -> np.ndarray:
    idx = np.array(sorted(int(f) for f in sample_flips), dtype=np.int64)
    if idx.size and (idx[0] < 0 or idx[-1] >= n_flips):
        bad = idx[0] if idx[0] < 0 else idx[-1]
        raise AbstractionError(f"Unknown flip index {bad} (universe has {n_flips} flips)")
    return idx


def score(sample_flips: Iterable[int], profile: SignificanceProfile, metric: Metric) -> ClassScores:
    """Additive class costs of a sample.

    Flips absent from the sample, including those of missing features,
    contribute nothing.

    Raises:
        AbstractionError: On a flip index outside the profile's universe
    """
    metric = Metric.parse(metric)
    idx = _flip_indices(sample_flips, profile.n_flips)
    costs = profile._sigma_t[metric.index][idx].sum(axis=0)
    return ClassScores(costs=costs, metric=metric)


def raw_confidence(costs: Sequence[float], label: int) -> float:
    """Mean absolute gap between the winning cost and every other cost."""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.shape[0] < 2:
        return 0.0
    gaps = np.abs(costs[label] - np.delete(costs, label))
    return float(gaps.sum() / (costs.shape[0] - 1))


def normalize_confidence(
    raw: float, bounds: Optional[Tuple[float, float]], normalization: str = "minmax"
) -> Tuple[float, Optional[str]]:
    """Scale a raw confidence into [0, 100] against training bounds.

    Returns:
        (confidence, warning); warning is set when the bounds are degenerate
    """
    if bounds is None:
        return 0.0, "no confidence bounds available; confidence set to 0"
    low, high = bounds
    if normalization == "max":
        if high <= 0:
            return 0.0, "degenerate confidence bounds (max raw = 0); confidence set to 0"
        scaled = raw / high
    else:
        if high <= low:
            return 0.0, "degenerate confidence bounds (max raw = min raw); confidence set to 0"
        scaled = (raw - low) / (high - low)
    return 100.0 * min(max(scaled, 0.0), 1.0), None


def classify(
    sample_flips: Iterable[int], profile: SignificanceProfile, metric: Metric
) -> ClassificationResult:
    """Assign the class with the highest cost and attach its confidence.

    Ties go to the smallest class index with a warning. A sample whose
    costs are all zero is flagged degenerate with confidence 0.
    """
    scores = score(sample_flips, profile, metric)
    return _result_from_scores(scores, profile)


def _result_from_scores(scores: ClassScores, profile: SignificanceProfile) -> ClassificationResult:
    costs = scores.costs
    warnings: List[str] = []
    label = int(np.argmax(costs))
    if np.count_nonzero(costs == costs[label]) > 1:
        warnings.append(f"tie between classes at cost {costs[label]:.6g}; smallest index chosen")
    if not np.any(costs):
        warnings.append("all class costs are zero; no knowledge about this sample")
        return ClassificationResult(label, scores, 0.0, 0.0, True, tuple(warnings))
    raw = raw_confidence(costs, label)
    confidence, warning = normalize_confidence(
        raw, profile.bounds.get(scores.metric), profile.normalization
    )
    if warning:
        warnings.append(warning)
    return ClassificationResult(label, scores, raw, confidence, False, tuple(warnings))


def classify_dataset(
    ft: FlipTable, profile: SignificanceProfile, metric: Metric
) -> List[ClassificationResult]:
    """Classify every row, in order; identical to row-by-row :func:`classify`."""
    metric = Metric.parse(metric)
    if ft.universe.n_flips != profile.n_flips:
        raise AbstractionError("Flip table and profile use different universes")
    results = [classify(ft.flips(i), profile, metric) for i in range(ft.n_rows)]
    ties = sum(1 for r in results if any(w.startswith("tie") for w in r.warnings))
    degenerate = sum(1 for r in results if r.degenerate)
    if ties or degenerate:
        logger.warning(
            "%s: %d of %d samples tied, %d degenerate", metric.value, ties, len(results), degenerate
        )
    return results


def _raw_confidences(ft: FlipTable, profile: SignificanceProfile, metric: Metric) -> np.ndarray:
    raws = []
    for i in range(ft.n_rows):
        costs = score(ft.flips(i), profile, metric).costs
        raws.append(raw_confidence(costs, int(np.argmax(costs))) if np.any(costs) else 0.0)
    return np.asarray(raws)


def train(
    ft: FlipTable,
    labels: Sequence[int],
    graphs: Sequence[ClassGraph],
    centralities: CentralityTable,
    normalization: str = "minmax",
) -> SignificanceProfile:
    """Compute the significance tensor and the confidence bounds.

    sigma(CPB) = P(f|c), sigma(CDG) = P(f|c) * degree, sigma(CPR) = P(f|c) * PageRank.
    The bounds are the min/max raw confidence over the training rows.

    Raises:
        ModelFormatError: If a centrality is not finite
    """
    if len(labels) != ft.n_rows:
        raise ModelFormatError(f"{len(labels)} labels for {ft.n_rows} flip rows")
    probs = np.vstack([g.flip_class_prob for g in graphs])
    for name, table in (("PageRank", centralities.pagerank), ("degree", centralities.degree)):
        bad = np.argwhere(~np.isfinite(table))
        if bad.size:
            c, f = bad[0]
            raise ModelFormatError(
                f"Non-finite {name} for flip '{ft.universe.flips[f]}' in class {c}"
            )
    sigma = np.zeros((len(Metric), probs.shape[0], probs.shape[1]))
    sigma[Metric.CPB.index] = probs
    sigma[Metric.CDG.index] = probs * centralities.degree
    sigma[Metric.CPR.index] = probs * centralities.pagerank

    profile = SignificanceProfile(sigma, ft.universe, {}, normalization)
    bounds = {}
    for metric in Metric:
        raws = _raw_confidences(ft, profile, metric)
        bounds[metric] = (float(raws.min()), float(raws.max())) if raws.size else (0.0, 0.0)
    return profile.with_bounds(bounds)
